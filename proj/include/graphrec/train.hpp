#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "graphrec/metrics.hpp"
#include "graphrec/model.hpp"
#include "graphrec/params.hpp"

namespace graphrec {

struct TrainConfig {
  std::size_t embed_dim = 64;
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double dropout_rate = 0.5;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::size_t neighbor_cap = 64;
  std::size_t fusion_depth = 3;
  std::size_t combine_depth = 3;
  std::size_t predict_depth = 3;
  std::size_t workers = 1;

  void validate() const {
    if (learning_rate <= 0) throw config_error("learning rate must be > 0");
    if (dropout_rate < 0 || dropout_rate >= 1) throw config_error("dropout rate must be in [0, 1)");
    if (patience < 1) throw config_error("patience must be >= 1");
    if (embed_dim < 1) throw config_error("embedding size must be >= 1");
    if (batch_size < 1) throw config_error("batch size must be >= 1");
    if (!(rmsprop_decay >= 0 && rmsprop_decay < 1)) throw config_error("rmsprop decay must be in [0, 1)");
  }
};

// Half mean squared error: 1/(2n) * sum (pred - truth)^2.
inline double loss(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size())
    throw contract_error("loss: need equal non-empty prediction/truth lists");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    s += e * e;
  }
  return s / (2.0 * static_cast<double>(predictions.size()));
}

// Tape form of the objective over prediction nodes. `denom` is the full batch
// size; worker chunks build partial sums against the same denominator so that
// chunk gradients add up exactly.
inline NodeId loss_node(Tape& tape, std::span<const NodeId> predictions,
                        std::span<const double> truths, std::size_t denom) {
  if (predictions.empty() || predictions.size() != truths.size())
    throw contract_error("loss_node: need equal non-empty prediction/truth lists");
  NodeId preds = tape.stack_scalars(predictions);
  NodeId target = tape.leaf(Tensor::column(std::vector<double>(truths.begin(), truths.end())));
  NodeId diff = tape.sub(preds, target);
  NodeId sq = tape.hadamard(diff, diff);
  return tape.scale(tape.sum(sq), 1.0 / (2.0 * static_cast<double>(denom)));
}

/// Per-parameter squared-gradient accumulators, same shapes as the params.
struct OptimizerState {
  GraphRecParams accum;

  explicit OptimizerState(const GraphRecParams& params) : accum(zeros_like(params)) {}
};

// s <- rho s + (1-rho) g^2;  theta <- theta - lr g / (sqrt(s) + eps).
inline void rmsprop_step(GraphRecParams& params, const GraphRecParams& grads,
                         OptimizerState& state, const TrainConfig& config) {
  auto tp = param_entries(params);
  auto tg = param_entries(grads);
  auto ts = param_entries(state.accum);
  if (tp.size() != tg.size() || tp.size() != ts.size())
    throw contract_error("rmsprop: parameter/gradient/state tensor counts disagree");
  const double rho = config.rmsprop_decay;
  const double eps = config.rmsprop_epsilon;
  const double lr = config.learning_rate;
  for (std::size_t t = 0; t < tp.size(); ++t) {
    Tensor& theta = *tp[t].tensor;
    const Tensor& g = *tg[t].tensor;
    Tensor& s = *ts[t].tensor;
    theta.require_same_shape(g, "rmsprop");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      s[i] = rho * s[i] + (1.0 - rho) * g[i] * g[i];
      theta[i] -= lr * g[i] / (std::sqrt(s[i]) + eps);
    }
  }
}

/// Tracks the running-best validation RMSE. An epoch counts against patience
/// only when strictly worse than the best seen; stop after `patience`
/// consecutive such epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  // Returns true when training should stop after this epoch.
  bool observe(double val_rmse) {
    if (val_rmse < best_) {
      best_ = val_rmse;
      improved_ = true;
      bad_streak_ = 0;
    } else {
      improved_ = false;
      if (val_rmse > best_) {
        ++bad_streak_;
      } else {
        bad_streak_ = 0;  // tie with the best breaks the streak
      }
    }
    return bad_streak_ >= patience_;
  }

  bool improved() const { return improved_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
  std::size_t bad_streak_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_rmse = 0.0;
  double val_mae = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  GraphRecParams best_params;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_rmse = std::numeric_limits<double>::infinity();
};

namespace detail {

struct ChunkGrad {
  GraphRecParams grads;
  double loss_sum = 0.0;  // sum of squared errors / 2
  bool finite = true;
};

// Forward/backward over one slice of a batch; gradients are of the half-SUM
// of squared errors, rescaled by 1/batch at merge time.
inline ChunkGrad run_chunk(const RatingGraph& graph, const SocialGraph& social,
                           const GraphRecParams& params,
                           std::span<const std::pair<UserId, ItemId>> pairs,
                           std::span<const double> truths, const ForwardOptions& opts) {
  ChunkGrad out{zeros_like(params)};
  auto fwd = forward_batch(graph, social, params, pairs, opts);
  Tape& tape = fwd.ctx->tape;
  NodeId l = loss_node(tape, fwd.nodes, truths, 1);  // denom applied at merge
  const double raw = tape.value(l).scalar();         // sum e^2 / 2
  out.loss_sum = raw;
  if (!std::isfinite(raw)) {
    out.finite = false;
    return out;
  }
  tape.backward(l);
  accumulate_gradients(tape, fwd.ctx->bound, out.grads);
  // Overflow shows up in the gradients one step before the loss: relu maps
  // NaN activations to 0, so an exploded forward can still produce a finite
  // loss value.
  for (const auto& e : param_entries(out.grads)) {
    if (!e.tensor->all_finite()) {
      out.finite = false;
      return out;
    }
  }
  return out;
}

inline void scale_params(GraphRecParams& p, double c) {
  for (auto& e : param_entries(p)) *e.tensor *= c;
}

inline void add_params(GraphRecParams& into, const GraphRecParams& from) {
  auto a = param_entries(into);
  auto b = param_entries(from);
  for (std::size_t i = 0; i < a.size(); ++i) *a[i].tensor += *b[i].tensor;
}

}  // namespace detail

// Minibatch RMSprop with per-epoch shuffling and early stopping on validation
// RMSE. Returns the parameters of the best validation epoch. Single-writer
// over params; batch gradients may fan out across workers on disjoint tapes
// and are merged as a deterministic ordered sum.
inline TrainResult train(const RatingGraph& train_graph, const SocialGraph& social,
                         const DatasetSplit& split, const TrainConfig& config,
                         const AblationConfig& ablation,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  config.validate();
  if (split.train.empty() || split.validation.empty())
    throw contract_error("train: need non-empty train and validation splits");

  ModelShapes shapes;
  shapes.n_users = train_graph.n_users();
  shapes.n_items = train_graph.n_items();
  shapes.r_max = train_graph.r_max();
  shapes.embed_dim = config.embed_dim;
  shapes.fusion_depth = config.fusion_depth;
  shapes.combine_depth = config.combine_depth;
  shapes.predict_depth = config.predict_depth;

  GraphRecParams params = init_params(shapes, config.seed);
  OptimizerState state(params);
  auto shuffle_rng = make_rng(derive_seed(config.seed, "shuffle"));

  EvalOptions val_opts;
  val_opts.neighbor_cap = config.neighbor_cap;
  val_opts.ablation = ablation;
  val_opts.split_name = "validation";

  TrainResult result;
  EarlyStopper stopper(config.patience);
  const std::size_t workers = std::max<std::size_t>(1, config.workers);

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::fisher_yates(order, shuffle_rng);

    double epoch_loss_sum = 0.0;
    std::size_t n_seen = 0;
    const std::uint64_t salt = derive_seed(config.seed, "neighbors", epoch);

    for (std::size_t begin = 0, batch_idx = 0; begin < order.size();
         begin += config.batch_size, ++batch_idx) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::size_t bsize = end - begin;
      std::vector<std::pair<UserId, ItemId>> pairs(bsize);
      std::vector<double> truths(bsize);
      for (std::size_t k = 0; k < bsize; ++k) {
        const RatingTriple& t = split.train[order[begin + k]];
        pairs[k] = {t.user, t.item};
        truths[k] = static_cast<double>(t.rating);
      }

      const std::size_t n_chunks = std::min(workers, bsize);
      std::vector<detail::ChunkGrad> chunk_out(n_chunks);
      auto chunk_bounds = [&](std::size_t c) {
        const std::size_t per = (bsize + n_chunks - 1) / n_chunks;
        const std::size_t lo = c * per;
        return std::make_pair(lo, std::min(bsize, lo + per));
      };
      auto run = [&](std::size_t c) {
        auto [lo, hi] = chunk_bounds(c);
        if (lo >= hi) {
          chunk_out[c] = detail::ChunkGrad{zeros_like(params)};
          return;
        }
        ForwardOptions opts;
        opts.ablation = ablation;
        opts.training = true;
        opts.dropout_rate = config.dropout_rate;
        opts.dropout_seed = derive_seed(config.seed, "dropout",
                                        (epoch << 24) ^ (batch_idx << 8) ^ c);
        opts.neighbor_cap = config.neighbor_cap;
        opts.sample_salt = salt;
        chunk_out[c] = detail::run_chunk(train_graph, social, params,
                                         std::span(pairs).subspan(lo, hi - lo),
                                         std::span(truths).subspan(lo, hi - lo), opts);
      };

      if (n_chunks == 1) {
        run(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(n_chunks);
        for (std::size_t c = 0; c < n_chunks; ++c) pool.emplace_back(run, c);
        for (auto& t : pool) t.join();
      }

      // Ordered merge keeps runs reproducible for a fixed worker count.
      GraphRecParams grads = zeros_like(params);
      double batch_loss_sum = 0.0;
      for (std::size_t c = 0; c < n_chunks; ++c) {
        if (!chunk_out[c].finite) throw divergence_error(epoch, batch_idx);
        batch_loss_sum += chunk_out[c].loss_sum;
        detail::add_params(grads, chunk_out[c].grads);
      }
      detail::scale_params(grads, 1.0 / static_cast<double>(bsize));
      const double batch_loss = batch_loss_sum / static_cast<double>(bsize);
      if (!std::isfinite(batch_loss)) throw divergence_error(epoch, batch_idx);
      epoch_loss_sum += batch_loss_sum;
      n_seen += bsize;

      rmsprop_step(params, grads, state, config);
    }

    MetricsReport val = evaluate(params, train_graph, social, split.validation, val_opts);
    const auto t1 = std::chrono::steady_clock::now();

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss_sum / static_cast<double>(n_seen);
    stats.val_rmse = val.rmse;
    stats.val_mae = val.mae;
    stats.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.history.push_back(stats);

    const bool stop = stopper.observe(val.rmse);
    if (stopper.improved()) {
      result.best_params = params;
      result.best_epoch = epoch;
      result.best_val_rmse = val.rmse;
    }
    if (on_epoch) on_epoch(stats);
    if (stop) break;
  }

  if (result.best_epoch == 0) {
    // Never improved on +inf means every epoch diverged in metric terms;
    // fall back to the final parameters.
    result.best_params = params;
    result.best_epoch = result.history.size();
    result.best_val_rmse = result.history.empty() ? 0.0 : result.history.back().val_rmse;
  }
  return result;
}

inline std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_rmse,val_mae,wall_seconds\n";
  char row[160];
  for (const auto& h : history) {
    std::snprintf(row, sizeof(row), "%zu,%.17g,%.17g,%.17g,%.3f\n", h.epoch, h.train_loss,
                  h.val_rmse, h.val_mae, h.wall_seconds);
    out += row;
  }
  return out;
}

}  // namespace graphrec
