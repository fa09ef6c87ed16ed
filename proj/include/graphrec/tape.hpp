#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "graphrec/tensor.hpp"

namespace graphrec {

using NodeId = std::size_t;

/// Records forward operations and replays them in reverse to accumulate
/// gradients. Node ids are handed out in construction order, so every input
/// id precedes its consumer and a plain reverse scan is a valid topological
/// order. A tape is single-owner: one forward/backward pass, no concurrent
/// mutation. Parallelism happens across independent tapes.
class Tape {
 public:
  NodeId leaf(Tensor v) { return push(std::move(v), nullptr); }

  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(NodeId id) const { return nodes_[id].value; }

  // Gradient of the last backward() target w.r.t. node `id`; zero tensor if
  // the node was not reached.
  Tensor grad_or_zero(NodeId id) const {
    if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
    return zeros_like(nodes_[id].value);
  }

  const Tensor* grad_if(NodeId id) const {
    if (id < grads_.size() && !grads_[id].empty()) return &grads_[id];
    return nullptr;
  }

  NodeId matmul(NodeId a, NodeId b) {
    Tensor out = graphrec::matmul(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
      t.accumulate(a, matmul_nt(g, t.value(b)));
      t.accumulate(b, matmul_tn(t.value(a), g));
    });
  }

  NodeId add(NodeId a, NodeId b) {
    Tensor out = graphrec::add(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  NodeId sub(NodeId a, NodeId b) {
    Tensor out = graphrec::sub(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
      t.accumulate(a, g);
      t.accumulate(b, scaled(g, -1.0));
    });
  }

  NodeId hadamard(NodeId a, NodeId b) {
    Tensor out = graphrec::hadamard(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
      t.accumulate(a, graphrec::hadamard(g, t.value(b)));
      t.accumulate(b, graphrec::hadamard(g, t.value(a)));
    });
  }

  NodeId scale(NodeId a, double c) {
    Tensor out = scaled(value(a), c);
    return push(std::move(out), [a, c](Tape& t, const Tensor& g) {
      t.accumulate(a, scaled(g, c));
    });
  }

  // Column vectors only; gradient splits back by slice.
  NodeId concat(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.is_column() && !va.empty())
      throw shape_error("concat: first input is not a column vector " + va.shape_str());
    if (!vb.is_column() && !vb.empty())
      throw shape_error("concat: second input is not a column vector " + vb.shape_str());
    Tensor out(va.rows() + vb.rows(), 1);
    for (std::size_t i = 0; i < va.rows(); ++i) out[i] = va[i];
    for (std::size_t i = 0; i < vb.rows(); ++i) out[va.rows() + i] = vb[i];
    const std::size_t na = va.rows(), nb = vb.rows();
    return push(std::move(out), [a, b, na, nb](Tape& t, const Tensor& g) {
      Tensor ga(na, 1), gb(nb, 1);
      for (std::size_t i = 0; i < na; ++i) ga[i] = g[i];
      for (std::size_t i = 0; i < nb; ++i) gb[i] = g[na + i];
      t.accumulate(a, std::move(ga));
      t.accumulate(b, std::move(gb));
    });
  }

  // n scalar nodes -> one n x 1 column.
  NodeId stack_scalars(std::span<const NodeId> ids) {
    if (ids.empty()) throw contract_error("stack_scalars: empty input");
    Tensor out(ids.size(), 1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Tensor& v = value(ids[i]);
      if (v.rows() != 1 || v.cols() != 1)
        throw shape_error("stack_scalars: input " + std::to_string(i) + " is " + v.shape_str());
      out[i] = v[0];
    }
    std::vector<NodeId> in(ids.begin(), ids.end());
    return push(std::move(out), [in = std::move(in)](Tape& t, const Tensor& g) {
      for (std::size_t i = 0; i < in.size(); ++i) t.accumulate(in[i], Tensor(1, 1, g[i]));
    });
  }

  // Subgradient at 0 is 0.
  NodeId relu(NodeId a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
      const Tensor& x = t.value(a);
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (x[i] <= 0.0) ga[i] = 0.0;
      t.accumulate(a, std::move(ga));
    });
  }

  // Max-subtracted for stability. Callers must handle empty neighbor sets
  // before reaching here.
  NodeId softmax(NodeId a) {
    const Tensor& x = value(a);
    if (!x.is_column()) throw shape_error("softmax: input is not a column vector " + x.shape_str());
    if (x.rows() == 0) throw contract_error("softmax: empty input");
    Tensor out(x.rows(), 1);
    double mx = x[0];
    for (std::size_t i = 1; i < x.rows(); ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out[i] = std::exp(x[i] - mx);
      z += out[i];
    }
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] /= z;
    NodeId id = push(std::move(out), nullptr);
    nodes_[id].back = [a, id](Tape& t, const Tensor& g) {
      const Tensor& y = t.value(id);
      double gy = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
      Tensor ga(y.rows(), 1);
      for (std::size_t i = 0; i < y.size(); ++i) ga[i] = y[i] * (g[i] - gy);
      t.accumulate(a, std::move(ga));
    };
    return id;
  }

  // sum_i w_i * v_i; differentiable in both the weights and the vectors.
  NodeId weighted_sum(NodeId weights, std::span<const NodeId> vectors) {
    const Tensor& w = value(weights);
    if (!w.is_column())
      throw shape_error("weighted_sum: weights are not a column vector " + w.shape_str());
    if (w.rows() != vectors.size())
      throw shape_error("weighted_sum: " + std::to_string(w.rows()) + " weights for " +
                        std::to_string(vectors.size()) + " vectors");
    if (vectors.empty()) throw contract_error("weighted_sum: empty vector list");
    const std::size_t d = value(vectors[0]).rows();
    Tensor out(d, 1);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const Tensor& v = value(vectors[i]);
      if (!v.is_column() || v.rows() != d)
        throw shape_error("weighted_sum: vector " + std::to_string(i) + " is " + v.shape_str() +
                          ", expected [" + std::to_string(d) + " x 1]");
      const double wi = w[i];
      for (std::size_t k = 0; k < d; ++k) out[k] += wi * v[k];
    }
    std::vector<NodeId> in(vectors.begin(), vectors.end());
    return push(std::move(out), [weights, in = std::move(in)](Tape& t, const Tensor& g) {
      const Tensor& w = t.value(weights);
      Tensor gw(in.size(), 1);
      for (std::size_t i = 0; i < in.size(); ++i) {
        gw[i] = graphrec::dot(t.value(in[i]), g);
        t.accumulate(in[i], scaled(g, w[i]));
      }
      t.accumulate(weights, std::move(gw));
    });
  }

  // Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
  // that eval is exactly the identity (same node id, bit-for-bit).
  NodeId dropout(NodeId a, double rate, bool training, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0)
      throw config_error("dropout rate must be in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return a;
    const Tensor& x = value(a);
    std::vector<double> mask(x.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask[i] = (u(rng) < rate) ? 0.0 : keep_scale;
      out[i] *= mask[i];
    }
    return push(std::move(out), [a, mask = std::move(mask)](Tape& t, const Tensor& g) {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= mask[i];
      t.accumulate(a, std::move(ga));
    });
  }

  NodeId sum(NodeId a) {
    const Tensor& x = value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
    return push(Tensor(1, 1, s), [a](Tape& t, const Tensor& g) {
      t.accumulate(a, Tensor(t.value(a).rows(), t.value(a).cols(), g[0]));
    });
  }

  // Row r of a table, as a column vector. The gradient scatters back into
  // that row only.
  NodeId row_as_column(NodeId table, std::size_t r) {
    const Tensor& m = value(table);
    if (r >= m.rows())
      throw index_error("row " + std::to_string(r) + " out of range for " + m.shape_str());
    Tensor out(m.cols(), 1);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] = m(r, j);
    return push(std::move(out), [table, r](Tape& t, const Tensor& g) {
      t.accumulate_row(table, r, g);
    });
  }

  // Reverse-topological gradient accumulation from a scalar loss node.
  void backward(NodeId loss_node) {
    const Tensor& l = value(loss_node);
    if (l.rows() != 1 || l.cols() != 1)
      throw contract_error("backward: loss node is " + l.shape_str() + ", expected [1 x 1]");
    grads_.assign(nodes_.size(), Tensor());
    grads_[loss_node] = Tensor(1, 1, 1.0);
    for (std::size_t i = loss_node + 1; i-- > 0;) {
      if (grads_[i].empty() || !nodes_[i].back) continue;
      nodes_[i].back(*this, grads_[i]);
    }
  }

  void accumulate(NodeId id, const Tensor& delta) {
    Tensor copy = delta;
    accumulate(id, std::move(copy));
  }

  void accumulate(NodeId id, Tensor&& delta) {
    if (grads_[id].empty()) {
      grads_[id] = std::move(delta);
    } else {
      grads_[id] += delta;
    }
  }

  void accumulate_row(NodeId table, std::size_t r, const Tensor& col_delta) {
    const Tensor& m = nodes_[table].value;
    if (grads_[table].empty()) grads_[table] = zeros_like(m);
    Tensor& g = grads_[table];
    for (std::size_t j = 0; j < m.cols(); ++j) g(r, j) += col_delta[j];
  }

 private:
  struct Node {
    Tensor value;
    std::function<void(Tape&, const Tensor&)> back;
  };

  NodeId push(Tensor value, std::function<void(Tape&, const Tensor&)> back) {
    nodes_.push_back(Node{std::move(value), std::move(back)});
    return nodes_.size() - 1;
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace graphrec
