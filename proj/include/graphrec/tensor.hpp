#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "graphrec/common.hpp"

namespace graphrec {

/// Dense row-major matrix of doubles. Column vectors are d x 1.
/// Tensors are immutable values in spirit: ops return new tensors, and the
/// few in-place helpers exist for gradient accumulation hot paths.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), v_(std::move(values)) {
    if (v_.size() != rows_ * cols_)
      throw shape_error("tensor init: " + std::to_string(v_.size()) + " values for shape " +
                        shape_str());
  }

  static Tensor column(std::initializer_list<double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values));
  }

  static Tensor column(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(n, 1, std::move(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  static Tensor gaussian(std::size_t rows, std::size_t cols, double mean, double stddev,
                         std::mt19937_64& rng) {
    Tensor t(rows, cols);
    std::normal_distribution<double> dist(mean, stddev);
    for (double& x : t.v_) x = dist(rng);
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  bool is_column() const { return cols_ == 1; }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  const std::vector<double>& values() const { return v_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    return "[" + std::to_string(rows_) + " x " + std::to_string(cols_) + "]";
  }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  double scalar() const {
    if (rows_ != 1 || cols_ != 1)
      throw contract_error("scalar() on non-scalar tensor " + shape_str());
    return v_[0];
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }

  Tensor& operator-=(const Tensor& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }

  Tensor& operator*=(double c) {
    for (double& x : v_) x *= c;
    return *this;
  }

  void require_same_shape(const Tensor& o, const char* op) const {
    if (!same_shape(o))
      throw shape_error(std::string(op) + ": shape mismatch " + shape_str() + " vs " +
                        o.shape_str());
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.rows(), t.cols()); }

inline Tensor add(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b, "add");
  Tensor c = a;
  c += b;
  return c;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b, "sub");
  Tensor c = a;
  c -= b;
  return c;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b, "hadamard");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}

inline Tensor scaled(const Tensor& a, double c) {
  Tensor r = a;
  r *= c;
  return r;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw shape_error("matmul: inner dimensions disagree " + a.shape_str() + " vs " +
                      b.shape_str());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// a * b^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw shape_error("matmul_nt: trailing dimensions disagree " + a.shape_str() + " vs " +
                      b.shape_str());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = s;
    }
  }
  return c;
}

// a^T * b
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw shape_error("matmul_tn: leading dimensions disagree " + a.shape_str() + " vs " +
                      b.shape_str());
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor c(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline Tensor transpose(const Tensor& a) {
  Tensor c(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(j, i) = a(i, j);
  return c;
}

inline double dot(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace graphrec
