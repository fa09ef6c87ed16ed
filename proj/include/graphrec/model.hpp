#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graphrec/graph.hpp"
#include "graphrec/params.hpp"
#include "graphrec/tape.hpp"

namespace graphrec {

/// Variant switches. use_social / use_opinion zero out the corresponding
/// signal; the attn_* flags swap an attention network for the uniform
/// mean-based aggregator. Parameter shapes are identical across variants so
/// they can share an initialization.
struct AblationConfig {
  bool use_social = true;
  bool use_opinion = true;
  bool attn_item_on = true;    // alpha
  bool attn_social_on = true;  // beta
  bool attn_user_on = true;    // mu

  static AblationConfig full() { return {}; }
  static AblationConfig sn() { return {.use_social = false}; }
  static AblationConfig opinion() { return {.use_opinion = false}; }
  static AblationConfig alpha() { return {.attn_item_on = false}; }
  static AblationConfig beta() { return {.attn_social_on = false}; }
  static AblationConfig alphabeta() { return {.attn_item_on = false, .attn_social_on = false}; }
  static AblationConfig mu() { return {.attn_user_on = false}; }
};

struct BoundAffine {
  NodeId W, b;
};

struct BoundAttention {
  NodeId W1, b1, w2, b2;
};

struct BoundMlp {
  std::vector<BoundAffine> layers;
};

/// Tape leaves for every parameter tensor. `ordered` mirrors param_entries()
/// order exactly; gradient collection relies on that alignment.
struct BoundParams {
  NodeId user_table = 0, item_table = 0, opinion_table = 0;
  BoundMlp fusion_item, fusion_user;
  BoundAttention attn_item, attn_social, attn_user;
  BoundAffine agg_item, agg_social, agg_user;
  BoundMlp combine, predict_hidden;
  NodeId predict_out = 0;
  std::vector<NodeId> ordered;
};

inline BoundParams bind_params(Tape& tape, const GraphRecParams& p) {
  BoundParams b;
  auto reg = [&](const Tensor& t) {
    NodeId id = tape.leaf(t);
    b.ordered.push_back(id);
    return id;
  };
  auto reg_mlp = [&](const MlpStack& m) {
    BoundMlp bm;
    for (const auto& layer : m.layers) {
      BoundAffine ba;
      ba.W = reg(layer.W);
      ba.b = reg(layer.b);
      bm.layers.push_back(ba);
    }
    return bm;
  };
  auto reg_attn = [&](const AttentionNet& a) {
    BoundAttention ba;
    ba.W1 = reg(a.W1);
    ba.b1 = reg(a.b1);
    ba.w2 = reg(a.w2);
    ba.b2 = reg(a.b2);
    return ba;
  };
  auto reg_affine = [&](const AffineMap& m) {
    BoundAffine ba;
    ba.W = reg(m.W);
    ba.b = reg(m.b);
    return ba;
  };

  // Same field order as param_entries().
  b.user_table = reg(p.embeddings.user_table);
  b.item_table = reg(p.embeddings.item_table);
  b.opinion_table = reg(p.embeddings.opinion_table);
  b.fusion_item = reg_mlp(p.fusion_item);
  b.fusion_user = reg_mlp(p.fusion_user);
  b.attn_item = reg_attn(p.attn_item);
  b.attn_social = reg_attn(p.attn_social);
  b.attn_user = reg_attn(p.attn_user);
  b.agg_item = reg_affine(p.agg_item);
  b.agg_social = reg_affine(p.agg_social);
  b.agg_user = reg_affine(p.agg_user);
  b.combine = reg_mlp(p.combine);
  b.predict_hidden = reg_mlp(p.predict_hidden);
  b.predict_out = reg(p.predict_out);
  return b;
}

// Adds the tape's leaf gradients into `grads` (same shapes as the params the
// tape was bound to). Field order matches param_entries(grads).
inline void accumulate_gradients(const Tape& tape, const BoundParams& bound,
                                 GraphRecParams& grads) {
  auto entries = param_entries(grads);
  if (entries.size() != bound.ordered.size())
    throw contract_error("gradient collection: bound parameter count mismatch");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (const Tensor* g = tape.grad_if(bound.ordered[i])) *entries[i].tensor += *g;
  }
}

/// Per-pass state: the tape, bound parameters, variant switches, dropout
/// configuration, neighbor caps, and memoization of shared subgraphs.
/// One context per batch; contexts are not shared across threads.
struct ForwardContext {
  Tape tape;
  const RatingGraph* graph = nullptr;  // training-set interactions
  const SocialGraph* social = nullptr;
  const GraphRecParams* params = nullptr;
  BoundParams bound;
  AblationConfig ablation;
  bool training = false;
  double dropout_rate = 0.0;
  std::mt19937_64 dropout_rng;
  std::size_t neighbor_cap = 64;
  std::uint64_t sample_salt = 0;  // per-epoch neighbor subsampling stream

  // Memoized nodes, valid for this tape only. h_item cache holds only
  // exclusion-free factors (the two-hop social gather); target factors with
  // a leakage-guard exclusion are rebuilt per pair.
  std::unordered_map<std::uint64_t, NodeId> x_cache;   // (item, rating) -> x_ia
  std::unordered_map<std::uint64_t, NodeId> f_cache;   // (user, rating) -> f_jt
  std::unordered_map<UserId, NodeId> h_item_cache;     // user -> h^I (no exclusion)
  std::unordered_map<UserId, NodeId> p_cache;          // user -> p_i node
  std::unordered_map<ItemId, NodeId> q_cache;          // item -> q_j node
  std::optional<NodeId> zero_col;

  ForwardContext(const RatingGraph& g, const SocialGraph& s, const GraphRecParams& p)
      : graph(&g), social(&s), params(&p) {
    bound = bind_params(tape, p);
  }

  std::size_t dim() const { return params->shapes.embed_dim; }

  NodeId zero_column() {
    if (!zero_col) zero_col = tape.leaf(Tensor(dim(), 1));
    return *zero_col;
  }

  NodeId user_embedding(UserId u) {
    auto it = p_cache.find(u);
    if (it != p_cache.end()) return it->second;
    NodeId id = tape.row_as_column(bound.user_table, u);
    p_cache.emplace(u, id);
    return id;
  }

  NodeId item_embedding(ItemId i) {
    auto it = q_cache.find(i);
    if (it != q_cache.end()) return it->second;
    NodeId id = tape.row_as_column(bound.item_table, i);
    q_cache.emplace(i, id);
    return id;
  }

  std::uint64_t sampling_seed(char kind, std::uint64_t node) const {
    return splitmix64(sample_salt ^ splitmix64((static_cast<std::uint64_t>(kind) << 32) | node));
  }
};

namespace detail {

inline NodeId mlp_forward(ForwardContext& ctx, const BoundMlp& mlp, NodeId x) {
  NodeId cur = x;
  for (const auto& layer : mlp.layers) {
    cur = ctx.tape.relu(ctx.tape.add(ctx.tape.matmul(layer.W, cur), layer.b));
    cur = ctx.tape.dropout(cur, ctx.dropout_rate, ctx.training, ctx.dropout_rng);
  }
  return cur;
}

inline NodeId affine_relu(ForwardContext& ctx, const BoundAffine& m, NodeId x) {
  return ctx.tape.relu(ctx.tape.add(ctx.tape.matmul(m.W, x), m.b));
}

}  // namespace detail

// x_ia = g_v([q_a (+) e_r]). With opinions ablated the rating embedding is
// replaced by a zero vector, so two ratings of the same item fuse identically.
inline NodeId opinion_aware_item_repr(ForwardContext& ctx, ItemId item, int rating) {
  if (rating < 1 || rating > ctx.params->shapes.r_max)
    throw validation_error("rating " + std::to_string(rating) + " outside {1.." +
                           std::to_string(ctx.params->shapes.r_max) + "}");
  const std::uint64_t key =
      (static_cast<std::uint64_t>(item) << 8) | static_cast<std::uint64_t>(rating);
  auto it = ctx.x_cache.find(key);
  if (it != ctx.x_cache.end()) return it->second;

  NodeId q = ctx.item_embedding(item);
  NodeId e = ctx.ablation.use_opinion
                 ? ctx.tape.row_as_column(ctx.bound.opinion_table, static_cast<std::size_t>(rating - 1))
                 : ctx.zero_column();
  NodeId x = detail::mlp_forward(ctx, ctx.bound.fusion_item, ctx.tape.concat(q, e));
  ctx.x_cache.emplace(key, x);
  return x;
}

// f_jt = g_u([p_t (+) e_r]), the user-side mirror of opinion_aware_item_repr.
inline NodeId opinion_aware_user_repr(ForwardContext& ctx, UserId user, int rating) {
  if (rating < 1 || rating > ctx.params->shapes.r_max)
    throw validation_error("rating " + std::to_string(rating) + " outside {1.." +
                           std::to_string(ctx.params->shapes.r_max) + "}");
  const std::uint64_t key =
      (static_cast<std::uint64_t>(user) << 8) | static_cast<std::uint64_t>(rating);
  auto it = ctx.f_cache.find(key);
  if (it != ctx.f_cache.end()) return it->second;

  NodeId p = ctx.user_embedding(user);
  NodeId e = ctx.ablation.use_opinion
                 ? ctx.tape.row_as_column(ctx.bound.opinion_table, static_cast<std::size_t>(rating - 1))
                 : ctx.zero_column();
  NodeId f = detail::mlp_forward(ctx, ctx.bound.fusion_user, ctx.tape.concat(p, e));
  ctx.f_cache.emplace(key, f);
  return f;
}

// Softmax-normalized two-layer attention scores, one per context vector.
// Disabled attention degrades to the mean-based aggregator: uniform 1/n.
inline NodeId attention_weights(ForwardContext& ctx, std::span<const NodeId> contexts,
                                NodeId target, const BoundAttention& net, bool enabled) {
  const std::size_t n = contexts.size();
  if (n == 0) throw contract_error("attention_weights: empty neighborhood");
  if (!enabled) return ctx.tape.leaf(Tensor(n, 1, 1.0 / static_cast<double>(n)));

  std::vector<NodeId> scores;
  scores.reserve(n);
  for (NodeId c : contexts) {
    NodeId hidden =
        ctx.tape.relu(ctx.tape.add(ctx.tape.matmul(net.W1, ctx.tape.concat(c, target)), net.b1));
    scores.push_back(ctx.tape.add(ctx.tape.matmul(net.w2, hidden), net.b2));
  }
  return ctx.tape.softmax(ctx.tape.stack_scalars(scores));
}

namespace detail {

// sigma(W . sum_i w_i ctx_i + b); the empty-set convention feeds a zero
// aggregate through the affine, yielding relu(b).
inline NodeId aggregate(ForwardContext& ctx, std::span<const NodeId> contexts, NodeId target,
                        const BoundAttention& attn, bool attn_on, const BoundAffine& map) {
  NodeId agg;
  if (contexts.empty()) {
    agg = ctx.zero_column();
  } else {
    NodeId w = attention_weights(ctx, contexts, target, attn, attn_on);
    agg = ctx.tape.weighted_sum(w, contexts);
  }
  return affine_relu(ctx, map, agg);
}

}  // namespace detail

// h^I_i: attention-weighted aggregation of opinion-aware item representations
// over C(i). `exclude` carries the leakage guard for the pair being scored.
inline NodeId item_space_user_factor(ForwardContext& ctx, UserId user,
                                     ExcludePair exclude = std::nullopt) {
  const bool cacheable = !exclude.has_value();
  if (cacheable) {
    auto it = ctx.h_item_cache.find(user);
    if (it != ctx.h_item_cache.end()) return it->second;
  }

  auto items = sample_capped(neighbors_C(*ctx.graph, user, exclude), ctx.neighbor_cap,
                             ctx.sampling_seed('C', user));
  std::vector<NodeId> xs;
  xs.reserve(items.size());
  for (auto [item, rating] : items) xs.push_back(opinion_aware_item_repr(ctx, item, rating));

  NodeId h = detail::aggregate(ctx, xs, ctx.user_embedding(user), ctx.bound.attn_item,
                               ctx.ablation.attn_item_on, ctx.bound.agg_item);
  if (cacheable) ctx.h_item_cache.emplace(user, h);
  return h;
}

// h^S_i: aggregates the item-space factors of social neighbors (a two-hop
// gather). Neighbor factors are exclusion-free; the leakage guard applies
// only to the target pair's own edge.
inline NodeId social_space_user_factor(ForwardContext& ctx, UserId user) {
  const auto& all = neighbors_N(*ctx.social, user);
  auto sampled = sample_capped(std::vector<UserId>(all.begin(), all.end()), ctx.neighbor_cap,
                               ctx.sampling_seed('N', user));
  std::vector<NodeId> hs;
  hs.reserve(sampled.size());
  for (UserId o : sampled) hs.push_back(item_space_user_factor(ctx, o));

  return detail::aggregate(ctx, hs, ctx.user_embedding(user), ctx.bound.attn_social,
                           ctx.ablation.attn_social_on, ctx.bound.agg_social);
}

// h_i: [h^I (+) h^S] through the combination MLP. With the social network
// ablated h^S is a zero vector of the same width, keeping shapes
// variant-invariant.
inline NodeId user_latent_factor(ForwardContext& ctx, UserId user,
                                 ExcludePair exclude = std::nullopt) {
  NodeId h_item = item_space_user_factor(ctx, user, exclude);
  NodeId h_social =
      ctx.ablation.use_social ? social_space_user_factor(ctx, user) : ctx.zero_column();
  return detail::mlp_forward(ctx, ctx.bound.combine, ctx.tape.concat(h_item, h_social));
}

// z_j: attention-weighted aggregation of opinion-aware user representations
// over B(j).
inline NodeId item_latent_factor(ForwardContext& ctx, ItemId item,
                                 ExcludePair exclude = std::nullopt) {
  auto users = sample_capped(neighbors_B(*ctx.graph, item, exclude), ctx.neighbor_cap,
                             ctx.sampling_seed('B', item));
  std::vector<NodeId> fs;
  fs.reserve(users.size());
  for (auto [user, rating] : users) fs.push_back(opinion_aware_user_repr(ctx, user, rating));

  return detail::aggregate(ctx, fs, ctx.item_embedding(item), ctx.bound.attn_user,
                           ctx.ablation.attn_user_on, ctx.bound.agg_user);
}

// r'_ij = w . MLP([h_i (+) z_j]); unbounded scalar, no clamping here.
inline NodeId predict_node(ForwardContext& ctx, UserId user, ItemId item) {
  ctx.graph->check_user(user);
  ctx.graph->check_item(item);
  ExcludePair guard = std::make_pair(user, item);
  NodeId h = user_latent_factor(ctx, user, guard);
  NodeId z = item_latent_factor(ctx, item, guard);
  NodeId g = detail::mlp_forward(ctx, ctx.bound.predict_hidden, ctx.tape.concat(h, z));
  return ctx.tape.matmul(ctx.bound.predict_out, g);
}

struct ForwardOptions {
  AblationConfig ablation;
  bool training = false;
  double dropout_rate = 0.0;
  std::uint64_t dropout_seed = 0;
  std::size_t neighbor_cap = 64;
  std::uint64_t sample_salt = 0;
};

struct BatchForward {
  std::unique_ptr<ForwardContext> ctx;
  std::vector<NodeId> nodes;
  std::vector<double> predictions;
};

inline BatchForward forward_batch(const RatingGraph& graph, const SocialGraph& social,
                                  const GraphRecParams& params,
                                  std::span<const std::pair<UserId, ItemId>> pairs,
                                  const ForwardOptions& opts) {
  if (pairs.empty()) throw contract_error("forward_batch: empty batch");
  auto ctx = std::make_unique<ForwardContext>(graph, social, params);
  ctx->ablation = opts.ablation;
  ctx->training = opts.training;
  ctx->dropout_rate = opts.dropout_rate;
  ctx->dropout_rng = make_rng(opts.dropout_seed);
  ctx->neighbor_cap = opts.neighbor_cap;
  ctx->sample_salt = opts.sample_salt;

  BatchForward out;
  out.nodes.reserve(pairs.size());
  out.predictions.reserve(pairs.size());
  for (auto [u, i] : pairs) {
    NodeId r = predict_node(*ctx, u, i);
    out.nodes.push_back(r);
    out.predictions.push_back(ctx->tape.value(r).scalar());
  }
  out.ctx = std::move(ctx);
  return out;
}

// Single-pair convenience used by evaluation and the predict command.
inline double predict_rating(const RatingGraph& graph, const SocialGraph& social,
                             const GraphRecParams& params, UserId user, ItemId item,
                             const ForwardOptions& opts = {}) {
  std::pair<UserId, ItemId> pair{user, item};
  auto fwd = forward_batch(graph, social, params, std::span(&pair, 1), opts);
  return fwd.predictions[0];
}

}  // namespace graphrec
