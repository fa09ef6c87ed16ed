#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphrec/metrics.hpp"
#include "graphrec/model.hpp"
#include "graphrec/train.hpp"

namespace graphrec {

inline AblationConfig variant_by_name(const std::string& name) {
  if (name == "full") return AblationConfig::full();
  if (name == "sn") return AblationConfig::sn();
  if (name == "opinion") return AblationConfig::opinion();
  if (name == "alpha") return AblationConfig::alpha();
  if (name == "beta") return AblationConfig::beta();
  if (name == "alphabeta") return AblationConfig::alphabeta();
  if (name == "mu") return AblationConfig::mu();
  throw config_error("unknown variant '" + name +
                     "' (expected one of: full, sn, opinion, alpha, beta, alphabeta, mu)");
}

inline std::vector<std::string> default_variants() {
  return {"full", "sn", "opinion", "alpha", "beta", "alphabeta", "mu"};
}

inline std::vector<std::size_t> default_sweep_sizes() { return {8, 16, 32, 64, 128, 256}; }

inline std::string config_fingerprint(const TrainConfig& c, const std::string& variant,
                                      std::uint64_t split_seed, double train_fraction) {
  std::string s;
  s += "d=" + std::to_string(c.embed_dim);
  s += ";lr=" + std::to_string(c.learning_rate);
  s += ";batch=" + std::to_string(c.batch_size);
  s += ";dropout=" + std::to_string(c.dropout_rate);
  s += ";rho=" + std::to_string(c.rmsprop_decay);
  s += ";eps=" + std::to_string(c.rmsprop_epsilon);
  s += ";epochs=" + std::to_string(c.max_epochs);
  s += ";patience=" + std::to_string(c.patience);
  s += ";seed=" + std::to_string(c.seed);
  s += ";cap=" + std::to_string(c.neighbor_cap);
  s += ";fusion_depth=" + std::to_string(c.fusion_depth);
  s += ";combine_depth=" + std::to_string(c.combine_depth);
  s += ";predict_depth=" + std::to_string(c.predict_depth);
  s += ";variant=" + variant;
  s += ";split_seed=" + std::to_string(split_seed);
  s += ";x=" + std::to_string(train_fraction);
  return hash_hex(fnv1a64(s));
}

struct RunRow {
  std::string label;  // variant name or embedding size
  MetricsReport test;
  double best_val_rmse = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Trains one configuration end to end and scores the test split.
inline RunRow run_experiment(const RatingGraph& train_graph, const SocialGraph& social,
                             const DatasetSplit& split, const TrainConfig& config,
                             const std::string& variant, const std::string& label) {
  AblationConfig ablation = variant_by_name(variant);
  TrainResult result = train(train_graph, social, split, config, ablation);

  EvalOptions opts;
  opts.neighbor_cap = config.neighbor_cap;
  opts.ablation = ablation;
  opts.split_name = "test";
  opts.config_fingerprint =
      config_fingerprint(config, variant, split.seed, split.train_fraction);

  RunRow row;
  row.label = label;
  row.test = evaluate(result.best_params, train_graph, social, split.test, opts);
  row.best_val_rmse = result.best_val_rmse;
  row.best_epoch = result.best_epoch;
  row.epochs_run = result.history.size();
  return row;
}

// One table row per variant, all trained from the same seed so the rows are
// comparable (and identical variant lists give identical rows).
inline std::vector<RunRow> ablation_report(const RatingGraph& train_graph,
                                           const SocialGraph& social, const DatasetSplit& split,
                                           const TrainConfig& config,
                                           const std::vector<std::string>& variants) {
  if (variants.empty()) throw contract_error("ablation_report: empty variant list");
  std::vector<RunRow> rows;
  rows.reserve(variants.size());
  for (const auto& v : variants)
    rows.push_back(run_experiment(train_graph, social, split, config, v, v));
  return rows;
}

// One full training run per embedding size, shared seed.
inline std::vector<RunRow> embedding_sweep(const RatingGraph& train_graph,
                                           const SocialGraph& social, const DatasetSplit& split,
                                           const TrainConfig& config,
                                           const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw contract_error("embedding_sweep: empty size list");
  std::vector<RunRow> rows;
  rows.reserve(sizes.size());
  for (std::size_t d : sizes) {
    TrainConfig c = config;
    c.embed_dim = d;
    rows.push_back(run_experiment(train_graph, social, split, c, "full", std::to_string(d)));
  }
  return rows;
}

inline nlohmann::json rows_to_json(const std::vector<RunRow>& rows, const std::string& label_key) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{label_key, r.label},
                   {"test_mae", r.test.mae},
                   {"test_rmse", r.test.rmse},
                   {"n", r.test.n},
                   {"clamped", r.test.clamped},
                   {"cold_users", r.test.cold_users},
                   {"cold_items", r.test.cold_items},
                   {"best_val_rmse", r.best_val_rmse},
                   {"best_epoch", r.best_epoch},
                   {"epochs_run", r.epochs_run},
                   {"config_fingerprint", r.test.config_fingerprint}});
  }
  return out;
}

inline std::string rows_to_table(const std::vector<RunRow>& rows, const std::string& label_key) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %8s %12s\n", label_key.c_str(), "test_mae",
                "test_rmse", "n", "fingerprint");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-12s %10.4f %10.4f %8zu %12s\n", r.label.c_str(),
                  r.test.mae, r.test.rmse, r.test.n, r.test.config_fingerprint.c_str());
    out += line;
  }
  return out;
}

inline nlohmann::json metrics_to_json(const MetricsReport& rep) {
  return {{"split", rep.split_name},
          {"mae", rep.mae},
          {"rmse", rep.rmse},
          {"n", rep.n},
          {"clamped", rep.clamped},
          {"cold_users", rep.cold_users},
          {"cold_items", rep.cold_items},
          {"config_fingerprint", rep.config_fingerprint}};
}

}  // namespace graphrec
