#pragma once

// Shared desk-scale fixtures and the whole-model finite-difference check.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "graphrec/graph.hpp"
#include "graphrec/model.hpp"
#include "graphrec/params.hpp"
#include "graphrec/train.hpp"

namespace testutil {

using namespace graphrec;

struct Fixture {
  RatingGraph graph;
  SocialGraph social;
  std::vector<std::pair<UserId, ItemId>> pairs;
  std::vector<double> truths;
};

// 4 users, 4 items, 6 ratings, 3 social edges.
inline Fixture small_fixture() {
  Fixture f;
  std::vector<RatingTriple> triples{
      {0, 0, 5}, {0, 1, 3}, {1, 1, 4}, {2, 2, 1}, {2, 0, 2}, {3, 3, 5},
  };
  f.graph = RatingGraph::from_triples(triples, 4, 4);
  f.social = SocialGraph::from_edges(4, {{0, 1}, {1, 2}, {3, 0}});
  for (const auto& t : triples) {
    f.pairs.emplace_back(t.user, t.item);
    f.truths.push_back(static_cast<double>(t.rating));
  }
  return f;
}

// 3 users / 3 items, used by the per-formula oracle comparisons.
inline Fixture tiny_fixture() {
  Fixture f;
  std::vector<RatingTriple> triples{{0, 0, 4}, {0, 2, 2}, {1, 0, 5}, {2, 1, 3}, {2, 2, 1}};
  f.graph = RatingGraph::from_triples(triples, 3, 3);
  f.social = SocialGraph::from_edges(3, {{0, 1}, {0, 2}, {2, 0}});
  for (const auto& t : triples) {
    f.pairs.emplace_back(t.user, t.item);
    f.truths.push_back(static_cast<double>(t.rating));
  }
  return f;
}

// 20 ratings over 5 users x 5 items, arranged so every neighborhood keeps at
// least 3 edges after the leakage guard; singleton pairs would make their own
// predictions structurally constant and put a floor under the training loss.
inline Fixture overfit_fixture() {
  Fixture f;
  std::vector<RatingTriple> triples;
  auto rng = make_rng(2024);
  std::uniform_int_distribution<int> rdist(1, 5);
  for (UserId u = 0; u < 5; ++u)
    for (ItemId k = 0; k < 4; ++k)
      triples.push_back({u, static_cast<ItemId>((u + k) % 5), rdist(rng)});
  f.graph = RatingGraph::from_triples(triples, 5, 5);
  f.social = SocialGraph::from_edges(5, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 3}});
  for (const auto& t : triples) {
    f.pairs.emplace_back(t.user, t.item);
    f.truths.push_back(static_cast<double>(t.rating));
  }
  return f;
}

// Memorization config for the overfit check: interpolates the 20 ratings
// within 500 epochs at a rate low enough that the end-stage RMSprop noise
// stays well under the 0.01 loss bar.
inline TrainConfig overfit_config() {
  TrainConfig c;
  c.embed_dim = 16;
  c.learning_rate = 0.00125;
  c.batch_size = 2;
  c.dropout_rate = 0.0;
  c.max_epochs = 500;
  c.patience = 500;
  c.seed = 7;
  c.neighbor_cap = 64;
  c.fusion_depth = 1;
  c.combine_depth = 1;
  c.predict_depth = 1;
  return c;
}

inline ForwardOptions eval_options(const AblationConfig& ab = {}, std::size_t cap = 1000) {
  ForwardOptions o;
  o.ablation = ab;
  o.training = false;
  o.neighbor_cap = cap;
  return o;
}

inline double model_loss_value(const GraphRecParams& params, const Fixture& f,
                               const AblationConfig& ab = {}) {
  auto fwd = forward_batch(f.graph, f.social, params, f.pairs, eval_options(ab));
  return loss(fwd.predictions, f.truths);
}

inline GraphRecParams model_grad_analytic(const GraphRecParams& params, const Fixture& f,
                                          const AblationConfig& ab = {}) {
  auto fwd = forward_batch(f.graph, f.social, params, f.pairs, eval_options(ab));
  Tape& tape = fwd.ctx->tape;
  NodeId l = loss_node(tape, fwd.nodes, f.truths, f.truths.size());
  tape.backward(l);
  GraphRecParams grads = zeros_like(params);
  accumulate_gradients(tape, fwd.ctx->bound, grads);
  return grads;
}

struct ModelFdReport {
  double max_rel_error = 0.0;
  std::string worst_entry;
  std::size_t checked = 0;
};

// Moves every parameter (biases included) to a generic point. Freshly
// initialized biases are exactly 0, which parks empty-neighborhood relu(b)
// outputs on the relu kink where the subgradient convention and one-sided
// finite differences legitimately disagree.
inline void jitter_params(GraphRecParams& params, std::uint64_t seed, double scale = 0.05) {
  auto rng = make_rng(derive_seed(seed, "jitter"));
  std::normal_distribution<double> dist(0.0, scale);
  for (auto& e : param_entries(params))
    for (std::size_t i = 0; i < e.tensor->size(); ++i) (*e.tensor)[i] += dist(rng);
}

// Central finite differences of the training objective w.r.t. every
// parameter element, against the tape gradient. Callers should jitter the
// parameters first; the check is only meaningful away from relu kinks.
inline ModelFdReport model_fd_check(GraphRecParams params, const Fixture& f,
                                    const AblationConfig& ab = {}, double h = 1e-5) {
  GraphRecParams analytic = model_grad_analytic(params, f, ab);
  auto pe = param_entries(params);
  auto ge = param_entries(analytic);

  ModelFdReport rep;
  for (std::size_t t = 0; t < pe.size(); ++t) {
    Tensor& theta = *pe[t].tensor;
    const Tensor& g = *ge[t].tensor;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = model_loss_value(params, f, ab);
      theta[i] = saved - h;
      const double down = model_loss_value(params, f, ab);
      theta[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      // Floor the denominator above the ~1e-10 double-precision noise of
      // central differences; sub-floor gradients are compared absolutely.
      const double rel = std::abs(g[i] - fd) / std::max(std::abs(g[i]) + std::abs(fd), 1e-4);
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_entry = pe[t].name + "[" + std::to_string(i) + "]";
      }
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace testutil
