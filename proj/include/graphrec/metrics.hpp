#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graphrec/graph.hpp"
#include "graphrec/model.hpp"

namespace graphrec {

inline double mae(std::span<const double> preds, std::span<const double> truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw contract_error("mae: need equal non-empty prediction/truth lists");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - truths[i]);
  return s / static_cast<double>(preds.size());
}

inline double rmse(std::span<const double> preds, std::span<const double> truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw contract_error("rmse: need equal non-empty prediction/truth lists");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - truths[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(preds.size()));
}

struct MetricsReport {
  std::string split_name;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  bool clamped = false;
  std::size_t cold_users = 0;  // pairs whose user had no train interactions left
  std::size_t cold_items = 0;
  std::string config_fingerprint;

  MetricsReport() = default;
  MetricsReport(std::string split, double mae_v, double rmse_v, std::size_t count, bool clamp)
      : split_name(std::move(split)), mae(mae_v), rmse(rmse_v), n(count), clamped(clamp) {
    if (n == 0) throw contract_error("metrics report over zero pairs");
    // mae <= rmse always; allow only floating-point slack.
    if (mae > rmse * (1.0 + 1e-12) + 1e-15)
      throw contract_error("metrics invariant violated: MAE " + std::to_string(mae) + " > RMSE " +
                           std::to_string(rmse));
  }
};

struct EvalOptions {
  bool clamp = false;  // clamp raw predictions into [1, r_max] before scoring
  std::size_t neighbor_cap = 64;
  std::size_t chunk = 512;
  AblationConfig ablation;
  std::string split_name = "eval";
  std::string config_fingerprint;
};

// Scores every triple; dropout off, leakage guard on. Cold users/items flow
// through the empty-neighborhood convention rather than being dropped.
inline MetricsReport evaluate(const GraphRecParams& params, const RatingGraph& train_graph,
                              const SocialGraph& social, std::span<const RatingTriple> triples,
                              const EvalOptions& opts = {}) {
  if (triples.empty()) throw contract_error("evaluate: empty triple list");

  ForwardOptions fwd;
  fwd.ablation = opts.ablation;
  fwd.training = false;
  fwd.neighbor_cap = opts.neighbor_cap;
  fwd.sample_salt = derive_seed(0, "eval-sampling");

  std::vector<double> preds, truths;
  preds.reserve(triples.size());
  truths.reserve(triples.size());
  std::size_t cold_users = 0, cold_items = 0;

  const double lo = 1.0, hi = static_cast<double>(train_graph.r_max());
  for (std::size_t begin = 0; begin < triples.size(); begin += opts.chunk) {
    const std::size_t end = std::min(triples.size(), begin + opts.chunk);
    std::vector<std::pair<UserId, ItemId>> pairs;
    pairs.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      pairs.emplace_back(triples[k].user, triples[k].item);
      ExcludePair guard = std::make_pair(triples[k].user, triples[k].item);
      if (neighbors_C(train_graph, triples[k].user, guard).empty()) ++cold_users;
      if (neighbors_B(train_graph, triples[k].item, guard).empty()) ++cold_items;
    }
    auto fwdres = forward_batch(train_graph, social, params, pairs, fwd);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      double p = fwdres.predictions[k];
      if (opts.clamp) p = std::clamp(p, lo, hi);
      preds.push_back(p);
      truths.push_back(static_cast<double>(triples[begin + k].rating));
    }
  }

  MetricsReport rep(opts.split_name, mae(preds, truths), rmse(preds, truths), preds.size(),
                    opts.clamp);
  rep.cold_users = cold_users;
  rep.cold_items = cold_items;
  rep.config_fingerprint = opts.config_fingerprint;
  return rep;
}

}  // namespace graphrec
