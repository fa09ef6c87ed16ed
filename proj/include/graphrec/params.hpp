#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphrec/tensor.hpp"

namespace graphrec {

/// p_i / q_j / e_r lookup tables. The opinion table has exactly r_max rows,
/// one dense vector per discrete rating level.
struct EmbeddingTables {
  Tensor user_table;     // n_users x d
  Tensor item_table;     // n_items x d
  Tensor opinion_table;  // r_max x d
  std::size_t dim = 0;
};

struct AffineMap {
  Tensor W;  // out x in
  Tensor b;  // out x 1
};

/// Two-layer score network shared by the three attention mechanisms:
/// score = w2 . relu(W1 [context (+) target] + b1) + b2.
struct AttentionNet {
  Tensor W1;  // hidden x 2d
  Tensor b1;  // hidden x 1
  Tensor w2;  // 1 x hidden
  Tensor b2;  // 1 x 1
};

/// Stack of relu(W x + b) layers. Serves the two opinion-fusion MLPs, the
/// factor-combination MLP, and the hidden part of the prediction MLP.
struct MlpStack {
  std::vector<AffineMap> layers;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().W.rows(); }
};

struct ModelShapes {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  int r_max = 5;
  std::size_t embed_dim = 64;
  std::size_t fusion_depth = 3;   // layers in g_v / g_u
  std::size_t combine_depth = 3;  // layers combining item-space and social-space factors
  std::size_t predict_depth = 3;  // hidden layers before the final linear map
};

struct GraphRecParams {
  EmbeddingTables embeddings;
  MlpStack fusion_item;  // g_v: [q_a (+) e_r] -> x_ia
  MlpStack fusion_user;  // g_u: [p_t (+) e_r] -> f_jt
  AttentionNet attn_item;
  AttentionNet attn_social;
  AttentionNet attn_user;
  AffineMap agg_item;    // item aggregation affine
  AffineMap agg_social;  // social aggregation affine
  AffineMap agg_user;    // user aggregation affine
  MlpStack combine;      // [h_I (+) h_S] -> h
  MlpStack predict_hidden;  // [h (+) z] -> g
  Tensor predict_out;       // 1 x d, final linear map
  ModelShapes shapes;
};

struct ParamEntry {
  std::string name;
  Tensor* tensor;
};

struct ConstParamEntry {
  std::string name;
  const Tensor* tensor;
};

namespace detail {

template <typename Params, typename Entry>
std::vector<Entry> enumerate_params(Params& p) {
  std::vector<Entry> out;
  auto add = [&](std::string name, auto& t) { out.push_back(Entry{std::move(name), &t}); };
  auto add_mlp = [&](const std::string& prefix, auto& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
      add(prefix + "." + std::to_string(i) + ".W", mlp.layers[i].W);
      add(prefix + "." + std::to_string(i) + ".b", mlp.layers[i].b);
    }
  };
  auto add_attn = [&](const std::string& prefix, auto& a) {
    add(prefix + ".W1", a.W1);
    add(prefix + ".b1", a.b1);
    add(prefix + ".w2", a.w2);
    add(prefix + ".b2", a.b2);
  };
  auto add_affine = [&](const std::string& prefix, auto& m) {
    add(prefix + ".W", m.W);
    add(prefix + ".b", m.b);
  };

  add("embeddings.user", p.embeddings.user_table);
  add("embeddings.item", p.embeddings.item_table);
  add("embeddings.opinion", p.embeddings.opinion_table);
  add_mlp("fusion_item", p.fusion_item);
  add_mlp("fusion_user", p.fusion_user);
  add_attn("attn_item", p.attn_item);
  add_attn("attn_social", p.attn_social);
  add_attn("attn_user", p.attn_user);
  add_affine("agg_item", p.agg_item);
  add_affine("agg_social", p.agg_social);
  add_affine("agg_user", p.agg_user);
  add_mlp("combine", p.combine);
  add_mlp("predict_hidden", p.predict_hidden);
  add("predict_out", p.predict_out);
  return out;
}

}  // namespace detail

// Fixed-order enumeration of every learnable tensor. The order is the
// contract for optimizer state, gradient merge, and checkpoint layout.
inline std::vector<ParamEntry> param_entries(GraphRecParams& p) {
  return detail::enumerate_params<GraphRecParams, ParamEntry>(p);
}

inline std::vector<ConstParamEntry> param_entries(const GraphRecParams& p) {
  return detail::enumerate_params<const GraphRecParams, ConstParamEntry>(p);
}

inline GraphRecParams zeros_like(const GraphRecParams& p) {
  GraphRecParams z = p;
  for (auto& e : param_entries(z)) *e.tensor = Tensor(e.tensor->rows(), e.tensor->cols());
  return z;
}

// Every weight and embedding ~ N(0, 0.1^2) under the seed; biases start at
// exactly 0 so an empty-neighborhood aggregate relu(W*0 + b) is the zero
// vector until training moves the bias.
inline GraphRecParams init_params(const ModelShapes& shapes, std::uint64_t seed) {
  const std::size_t d = shapes.embed_dim;
  if (d < 1) throw config_error("embedding size must be >= 1");
  auto rng = make_rng(derive_seed(seed, "init"));
  const double stddev = 0.1;
  auto gauss = [&](std::size_t r, std::size_t c) { return Tensor::gaussian(r, c, 0.0, stddev, rng); };

  GraphRecParams p;
  p.shapes = shapes;
  p.embeddings.dim = d;
  p.embeddings.user_table = gauss(shapes.n_users, d);
  p.embeddings.item_table = gauss(shapes.n_items, d);
  p.embeddings.opinion_table = gauss(static_cast<std::size_t>(shapes.r_max), d);

  // All hidden widths equal the embedding size; only the first layer widens
  // its input to accept a concatenated pair of d-vectors.
  auto make_mlp = [&](std::size_t depth, std::size_t in, std::size_t out) {
    MlpStack m;
    std::size_t cur = in;
    for (std::size_t i = 0; i < depth; ++i) {
      m.layers.push_back(AffineMap{gauss(out, cur), Tensor(out, 1)});
      cur = out;
    }
    return m;
  };
  auto make_attn = [&]() {
    // Hidden width equals the embedding size.
    return AttentionNet{gauss(d, 2 * d), Tensor(d, 1), gauss(1, d), Tensor(1, 1)};
  };
  auto make_affine = [&]() { return AffineMap{gauss(d, d), Tensor(d, 1)}; };

  p.fusion_item = make_mlp(shapes.fusion_depth, 2 * d, d);
  p.fusion_user = make_mlp(shapes.fusion_depth, 2 * d, d);
  p.attn_item = make_attn();
  p.attn_social = make_attn();
  p.attn_user = make_attn();
  p.agg_item = make_affine();
  p.agg_social = make_affine();
  p.agg_user = make_affine();
  p.combine = make_mlp(shapes.combine_depth, 2 * d, d);
  p.predict_hidden = make_mlp(shapes.predict_depth, 2 * d, d);
  p.predict_out = gauss(1, d);
  return p;
}

inline std::size_t param_count(const GraphRecParams& p) {
  std::size_t n = 0;
  for (const auto& e : param_entries(p)) n += e.tensor->size();
  return n;
}

}  // namespace graphrec
