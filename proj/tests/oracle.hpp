#pragma once

// Straight-line scalar re-implementation of the GraphRec forward pass, kept
// deliberately naive: plain double loops, no tensors, no tape, no caching.
// It exists only to cross-check the production forward path and must stay
// independent of it.

#include <cmath>
#include <vector>

#include "graphrec/graph.hpp"
#include "graphrec/model.hpp"
#include "graphrec/params.hpp"

namespace oracle {

using Vec = std::vector<double>;
using graphrec::AblationConfig;
using graphrec::AttentionNet;
using graphrec::GraphRecParams;
using graphrec::ItemId;
using graphrec::MlpStack;
using graphrec::RatingGraph;
using graphrec::SocialGraph;
using graphrec::Tensor;
using graphrec::UserId;

inline Vec row_of(const Tensor& table, std::size_t r) {
  Vec out(table.cols());
  for (std::size_t j = 0; j < table.cols(); ++j) out[j] = table(r, j);
  return out;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Vec affine_relu(const Tensor& W, const Tensor& b, const Vec& x) {
  Vec out(W.rows());
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double s = b(i, 0);
    for (std::size_t k = 0; k < W.cols(); ++k) s += W(i, k) * x[k];
    out[i] = s > 0.0 ? s : 0.0;
  }
  return out;
}

inline Vec mlp(const MlpStack& m, Vec x) {
  for (const auto& layer : m.layers) x = affine_relu(layer.W, layer.b, x);
  return x;
}

inline double attention_score(const AttentionNet& net, const Vec& context, const Vec& target) {
  Vec hidden = affine_relu(net.W1, net.b1, concat(context, target));
  double s = net.b2(0, 0);
  for (std::size_t k = 0; k < hidden.size(); ++k) s += net.w2(0, k) * hidden[k];
  return s;
}

inline Vec softmax_plain(const Vec& scores) {
  Vec out(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i]);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

inline Vec attention_weights(const AttentionNet& net, const std::vector<Vec>& contexts,
                             const Vec& target, bool enabled) {
  const std::size_t n = contexts.size();
  if (!enabled) return Vec(n, 1.0 / static_cast<double>(n));
  Vec scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = attention_score(net, contexts[i], target);
  return softmax_plain(scores);
}

inline Vec aggregate(const graphrec::AffineMap& map, const AttentionNet& net,
                     const std::vector<Vec>& contexts, const Vec& target, bool attn_on,
                     std::size_t d) {
  Vec agg(d, 0.0);
  if (!contexts.empty()) {
    Vec w = attention_weights(net, contexts, target, attn_on);
    for (std::size_t i = 0; i < contexts.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) agg[k] += w[i] * contexts[i][k];
  }
  return affine_relu(map.W, map.b, agg);
}

inline Vec opinion_or_zero(const GraphRecParams& p, int rating, bool use_opinion) {
  if (!use_opinion) return Vec(p.shapes.embed_dim, 0.0);
  return row_of(p.embeddings.opinion_table, static_cast<std::size_t>(rating - 1));
}

inline Vec x_repr(const GraphRecParams& p, const AblationConfig& ab, ItemId item, int rating) {
  Vec q = row_of(p.embeddings.item_table, item);
  return mlp(p.fusion_item, concat(q, opinion_or_zero(p, rating, ab.use_opinion)));
}

inline Vec f_repr(const GraphRecParams& p, const AblationConfig& ab, UserId user, int rating) {
  Vec pt = row_of(p.embeddings.user_table, user);
  return mlp(p.fusion_user, concat(pt, opinion_or_zero(p, rating, ab.use_opinion)));
}

inline Vec item_space_factor(const RatingGraph& g, const GraphRecParams& p,
                             const AblationConfig& ab, UserId user,
                             graphrec::ExcludePair exclude = std::nullopt) {
  std::vector<Vec> xs;
  for (auto [item, rating] : graphrec::neighbors_C(g, user, exclude))
    xs.push_back(x_repr(p, ab, item, rating));
  Vec target = row_of(p.embeddings.user_table, user);
  return aggregate(p.agg_item, p.attn_item, xs, target, ab.attn_item_on, p.shapes.embed_dim);
}

inline Vec social_space_factor(const RatingGraph& g, const SocialGraph& s,
                               const GraphRecParams& p, const AblationConfig& ab, UserId user) {
  std::vector<Vec> hs;
  for (UserId o : graphrec::neighbors_N(s, user)) hs.push_back(item_space_factor(g, p, ab, o));
  Vec target = row_of(p.embeddings.user_table, user);
  return aggregate(p.agg_social, p.attn_social, hs, target, ab.attn_social_on,
                   p.shapes.embed_dim);
}

inline Vec user_factor(const RatingGraph& g, const SocialGraph& s, const GraphRecParams& p,
                       const AblationConfig& ab, UserId user,
                       graphrec::ExcludePair exclude = std::nullopt) {
  Vec h_item = item_space_factor(g, p, ab, user, exclude);
  Vec h_social = ab.use_social ? social_space_factor(g, s, p, ab, user)
                               : Vec(p.shapes.embed_dim, 0.0);
  return mlp(p.combine, concat(h_item, h_social));
}

inline Vec item_factor(const RatingGraph& g, const GraphRecParams& p, const AblationConfig& ab,
                       ItemId item, graphrec::ExcludePair exclude = std::nullopt) {
  std::vector<Vec> fs;
  for (auto [user, rating] : graphrec::neighbors_B(g, item, exclude))
    fs.push_back(f_repr(p, ab, user, rating));
  Vec target = row_of(p.embeddings.item_table, item);
  return aggregate(p.agg_user, p.attn_user, fs, target, ab.attn_user_on, p.shapes.embed_dim);
}

inline double predict(const RatingGraph& g, const SocialGraph& s, const GraphRecParams& p,
                      const AblationConfig& ab, UserId user, ItemId item) {
  graphrec::ExcludePair guard = std::make_pair(user, item);
  Vec h = user_factor(g, s, p, ab, user, guard);
  Vec z = item_factor(g, p, ab, item, guard);
  Vec out = mlp(p.predict_hidden, concat(h, z));
  double r = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) r += p.predict_out(0, k) * out[k];
  return r;
}

}  // namespace oracle
