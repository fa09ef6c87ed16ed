// Command-line front end: ingest, split, train, evaluate, ablate, sweep,
// predict. Every run writes a manifest sufficient to replay it bit-for-bit
// (single-threaded mode); flags win over config-file values.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphrec/graphrec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphrec;

namespace {

// Exit codes: 2 missing input, 3 parse/validation, 4 incompatible
// checkpoint, 5 divergence, 1 anything else.
enum ExitCode : int {
  kOk = 0,
  kFail = 1,
  kMissingFile = 2,
  kBadInput = 3,
  kBadCheckpoint = 4,
  kDiverged = 5,
};

struct DataArgs {
  std::string ratings_path;
  std::string trust_path;
  int r_max = 5;
  bool symmetrize = false;
  bool round_ratings = false;

  LoadOptions load_options() const {
    LoadOptions o;
    o.r_max = r_max;
    o.symmetrize_trust = symmetrize;
    o.round_ratings = round_ratings;
    return o;
  }
};

struct SplitArgs {
  double x = 0.8;
  std::uint64_t seed = 1;
};

struct TrainArgs {
  TrainConfig config;
  std::string variant = "full";
  std::string out_dir = "out";
};

void add_data_options(CLI::App* cmd, DataArgs& d, bool trust_required = false) {
  cmd->add_option("--ratings", d.ratings_path, "ratings file: `user item rating` per line")
      ->required();
  auto* trust = cmd->add_option("--trust", d.trust_path,
                                "trust file: `truster trustee` per line");
  if (trust_required) trust->required();
  cmd->add_option("--r-max", d.r_max, "rating scale upper bound");
  cmd->add_flag("--symmetrize", d.symmetrize, "ingest trust edges in both directions");
  cmd->add_flag("--round-ratings", d.round_ratings,
                "map non-integer ratings to the nearest level instead of rejecting");
}

void add_split_options(CLI::App* cmd, SplitArgs& s) {
  cmd->add_option("--x", s.x, "train fraction; (1-x)/2 each to validation and test");
  cmd->add_option("--split-seed", s.seed, "seed for the split permutation");
}

void add_train_options(CLI::App* cmd, TrainArgs& t) {
  TrainConfig& c = t.config;
  cmd->add_option("--d", c.embed_dim, "embedding size");
  cmd->add_option("--lr", c.learning_rate, "learning rate");
  cmd->add_option("--batch", c.batch_size, "minibatch size");
  cmd->add_option("--dropout", c.dropout_rate, "dropout rate in [0, 1)");
  cmd->add_option("--rho", c.rmsprop_decay, "squared-gradient decay");
  cmd->add_option("--eps", c.rmsprop_epsilon, "optimizer denominator epsilon");
  cmd->add_option("--epochs", c.max_epochs, "epoch cap");
  cmd->add_option("--patience", c.patience, "early-stopping patience");
  cmd->add_option("--seed", c.seed, "root seed (init / shuffle / dropout streams)");
  cmd->add_option("--cap", c.neighbor_cap, "neighbor subsample cap (0 = unlimited)");
  cmd->add_option("--fusion-depth", c.fusion_depth, "layers in the opinion fusion MLPs");
  cmd->add_option("--combine-depth", c.combine_depth, "layers in the factor combination MLP");
  cmd->add_option("--predict-depth", c.predict_depth, "hidden layers in the prediction MLP");
  cmd->add_option("--workers", c.workers, "batch-parallel gradient workers");
  cmd->add_option("--variant", t.variant,
                  "model variant: full, sn, opinion, alpha, beta, alphabeta, mu");
  cmd->add_option("--out", t.out_dir, "output directory");
}

// Environment override for the output directory only.
std::string resolve_out_dir(const std::string& flag_value) {
  if (const char* env = std::getenv("GRAPHREC_OUT"); env && *env) return env;
  return flag_value;
}

SocialGraph load_social(const DataArgs& d, const RatingGraph& graph, LoadReport* rep) {
  if (d.trust_path.empty()) return SocialGraph(graph.n_users());
  return load_trust(d.trust_path, graph, d.load_options(), rep);
}

json data_manifest(const DataArgs& d) {
  json j;
  j["ratings_path"] = d.ratings_path;
  j["ratings_hash"] = hash_file(d.ratings_path);
  if (!d.trust_path.empty()) {
    j["trust_path"] = d.trust_path;
    j["trust_hash"] = hash_file(d.trust_path);
  }
  j["r_max"] = d.r_max;
  j["symmetrize"] = d.symmetrize;
  j["round_ratings"] = d.round_ratings;
  return j;
}

std::string fmt_double(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%.17g", v);
  return b;
}

// Flat, sorted key=value text; readable back through --config.
void write_manifest_cfg(const fs::path& path, const std::map<std::string, std::string>& kv) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write manifest: " + path.string());
  out << "# " << kToolVersion << " run manifest; pass via --config to replay\n";
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

std::map<std::string, std::string> manifest_kv(const DataArgs& d, const SplitArgs& s,
                                               const TrainArgs& t) {
  const TrainConfig& c = t.config;
  std::map<std::string, std::string> kv;
  kv["ratings"] = d.ratings_path;
  if (!d.trust_path.empty()) kv["trust"] = d.trust_path;
  kv["r-max"] = std::to_string(d.r_max);
  if (d.symmetrize) kv["symmetrize"] = "true";
  if (d.round_ratings) kv["round-ratings"] = "true";
  kv["x"] = fmt_double(s.x);
  kv["split-seed"] = std::to_string(s.seed);
  kv["d"] = std::to_string(c.embed_dim);
  kv["lr"] = fmt_double(c.learning_rate);
  kv["batch"] = std::to_string(c.batch_size);
  kv["dropout"] = fmt_double(c.dropout_rate);
  kv["rho"] = fmt_double(c.rmsprop_decay);
  kv["eps"] = fmt_double(c.rmsprop_epsilon);
  kv["epochs"] = std::to_string(c.max_epochs);
  kv["patience"] = std::to_string(c.patience);
  kv["seed"] = std::to_string(c.seed);
  kv["cap"] = std::to_string(c.neighbor_cap);
  kv["fusion-depth"] = std::to_string(c.fusion_depth);
  kv["combine-depth"] = std::to_string(c.combine_depth);
  kv["predict-depth"] = std::to_string(c.predict_depth);
  kv["workers"] = std::to_string(c.workers);
  kv["variant"] = t.variant;
  kv["out"] = t.out_dir;
  return kv;
}

json train_config_json(const TrainConfig& c, const std::string& variant) {
  return {{"embed_dim", c.embed_dim},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"dropout_rate", c.dropout_rate},
          {"rmsprop_decay", c.rmsprop_decay},
          {"rmsprop_epsilon", c.rmsprop_epsilon},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"neighbor_cap", c.neighbor_cap},
          {"fusion_depth", c.fusion_depth},
          {"combine_depth", c.combine_depth},
          {"predict_depth", c.predict_depth},
          {"workers", c.workers},
          {"variant", variant}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig base = {}) {
  base.embed_dim = j.value("embed_dim", base.embed_dim);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.dropout_rate = j.value("dropout_rate", base.dropout_rate);
  base.rmsprop_decay = j.value("rmsprop_decay", base.rmsprop_decay);
  base.rmsprop_epsilon = j.value("rmsprop_epsilon", base.rmsprop_epsilon);
  base.max_epochs = j.value("max_epochs", base.max_epochs);
  base.patience = j.value("patience", base.patience);
  base.seed = j.value("seed", base.seed);
  base.neighbor_cap = j.value("neighbor_cap", base.neighbor_cap);
  base.fusion_depth = j.value("fusion_depth", base.fusion_depth);
  base.combine_depth = j.value("combine_depth", base.combine_depth);
  base.predict_depth = j.value("predict_depth", base.predict_depth);
  return base;
}

int cmd_ingest(const DataArgs& d, const std::string& out_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);

  LoadReport rating_rep;
  RatingGraph graph = load_ratings(d.ratings_path, d.load_options(), &rating_rep);
  LoadReport trust_rep;
  SocialGraph social = load_social(d, graph, &trust_rep);

  {
    std::ofstream out(out_dir / "ratings.indexed.txt");
    for (const auto& t : graph.triples())
      out << t.user << '\t' << t.item << '\t' << t.rating << '\n';
  }
  {
    std::ofstream out(out_dir / "trust.indexed.txt");
    for (UserId u = 0; u < graph.n_users(); ++u)
      for (UserId v : social.neighbors(u)) out << u << '\t' << v << '\n';
  }
  {
    std::ofstream out(out_dir / "user_map.txt");
    for (std::size_t i = 0; i < graph.user_raw_ids().size(); ++i)
      out << i << '\t' << graph.user_raw_ids()[i] << '\n';
  }
  {
    std::ofstream out(out_dir / "item_map.txt");
    for (std::size_t i = 0; i < graph.item_raw_ids().size(); ++i)
      out << i << '\t' << graph.item_raw_ids()[i] << '\n';
  }

  json report;
  report["n_users"] = graph.n_users();
  report["n_items"] = graph.n_items();
  report["n_ratings"] = graph.triples().size();
  report["duplicate_pairs"] = rating_rep.duplicates;
  report["rounded_ratings"] = rating_rep.rounded;
  report["n_social_edges"] = social.n_edges();
  report["trust_self_loops_dropped"] = trust_rep.self_loops;
  report["trust_unknown_users_dropped"] = trust_rep.unknown_users;
  report["data"] = data_manifest(d);
  report["tool_version"] = kToolVersion;

  std::ofstream(out_dir / "load_report.json") << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_split(const DataArgs& d, const SplitArgs& s, const std::string& out_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);

  RatingGraph graph = load_ratings(d.ratings_path, d.load_options());
  DatasetSplit ds = split(graph, s.x, s.seed);

  auto write_piece = [&](const char* name, const std::vector<RatingTriple>& triples) {
    std::ofstream out(out_dir / name);
    for (const auto& t : triples)
      out << graph.user_raw_ids()[t.user] << '\t' << graph.item_raw_ids()[t.item] << '\t'
          << t.rating << '\n';
  };
  write_piece("train.txt", ds.train);
  write_piece("validation.txt", ds.validation);
  write_piece("test.txt", ds.test);

  json manifest;
  manifest["seed"] = s.seed;
  manifest["x"] = s.x;
  manifest["counts"] = {{"train", ds.train.size()},
                        {"validation", ds.validation.size()},
                        {"test", ds.test.size()}};
  manifest["data"] = data_manifest(d);
  manifest["tool_version"] = kToolVersion;
  std::ofstream(out_dir / "split_manifest.json") << manifest.dump(2) << "\n";
  std::cout << manifest.dump(2) << "\n";
  return kOk;
}

struct LoadedRun {
  RatingGraph graph;
  SocialGraph social;
  DatasetSplit split_data;
  RatingGraph train_graph;
};

LoadedRun load_run(const DataArgs& d, const SplitArgs& s) {
  LoadedRun r;
  r.graph = load_ratings(d.ratings_path, d.load_options());
  r.social = load_social(d, r.graph, nullptr);
  r.split_data = split(r.graph, s.x, s.seed);
  r.train_graph = RatingGraph::from_triples(r.split_data.train, r.graph.n_users(),
                                            r.graph.n_items(), r.graph.r_max());
  return r;
}

int cmd_train(const DataArgs& d, const SplitArgs& s, const TrainArgs& t) {
  const fs::path out_dir = resolve_out_dir(t.out_dir);
  fs::create_directories(out_dir);

  LoadedRun run = load_run(d, s);
  AblationConfig ablation = variant_by_name(t.variant);

  TrainResult result = train(run.train_graph, run.social, run.split_data, t.config, ablation,
                             [](const EpochStats& e) {
                               std::fprintf(stderr,
                                            "epoch %zu  train_loss %.6f  val_rmse %.6f  "
                                            "val_mae %.6f  (%.1fs)\n",
                                            e.epoch, e.train_loss, e.val_rmse, e.val_mae,
                                            e.wall_seconds);
                             });

  std::ofstream(out_dir / "history.csv") << history_csv(result.history);

  Checkpoint ckpt;
  ckpt.params = result.best_params;
  ckpt.ablation = ablation;
  ckpt.seed = t.config.seed;
  ckpt.neighbor_cap = t.config.neighbor_cap;
  ckpt.extra["train_config"] = train_config_json(t.config, t.variant);
  ckpt.extra["split"] = {{"x", s.x}, {"seed", s.seed}};
  ckpt.extra["data"] = data_manifest(d);
  ckpt.extra["best_epoch"] = result.best_epoch;
  ckpt.extra["best_val_rmse"] = result.best_val_rmse;
  ckpt.extra["tool_version"] = kToolVersion;
  const fs::path ckpt_path = out_dir / "checkpoint.bin";
  save_checkpoint(ckpt, ckpt_path.string());

  write_manifest_cfg(out_dir / "manifest.cfg", manifest_kv(d, s, t));
  json manifest;
  manifest["train_config"] = train_config_json(t.config, t.variant);
  manifest["split"] = {{"x", s.x}, {"seed", s.seed}};
  manifest["data"] = data_manifest(d);
  manifest["tool_version"] = kToolVersion;
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";

  json summary;
  summary["checkpoint"] = ckpt_path.string();
  summary["history"] = (out_dir / "history.csv").string();
  summary["manifest"] = (out_dir / "manifest.cfg").string();
  summary["epochs_run"] = result.history.size();
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_rmse"] = result.best_val_rmse;
  summary["config_fingerprint"] = config_fingerprint(t.config, t.variant, s.seed, s.x);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& ckpt_path, const DataArgs& d, std::string split_name,
                 bool clamp, bool have_x, const SplitArgs& cli_split) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);

  SplitArgs s = cli_split;
  if (!have_x && ckpt.extra.contains("split")) {
    s.x = ckpt.extra["split"].value("x", s.x);
    s.seed = ckpt.extra["split"].value("seed", s.seed);
  }
  DataArgs data = d;
  if (data.ratings_path.empty() && ckpt.extra.contains("data")) {
    data.ratings_path = ckpt.extra["data"].value("ratings_path", "");
    data.trust_path = ckpt.extra["data"].value("trust_path", "");
  }
  if (data.ratings_path.empty()) throw config_error("evaluate: no ratings file given");

  LoadedRun run = load_run(data, s);
  check_checkpoint_compat(ckpt, run.graph);

  const std::vector<RatingTriple>* triples = nullptr;
  if (split_name == "test")
    triples = &run.split_data.test;
  else if (split_name == "validation")
    triples = &run.split_data.validation;
  else if (split_name == "train")
    triples = &run.split_data.train;
  else
    throw config_error("unknown split '" + split_name + "'");

  EvalOptions opts;
  opts.clamp = clamp;
  opts.neighbor_cap = ckpt.neighbor_cap;
  opts.ablation = ckpt.ablation;
  opts.split_name = split_name;
  if (ckpt.extra.contains("train_config")) {
    TrainConfig c = train_config_from_json(ckpt.extra["train_config"]);
    opts.config_fingerprint = config_fingerprint(
        c, ckpt.extra["train_config"].value("variant", "full"), s.seed, s.x);
  }
  MetricsReport rep = evaluate(ckpt.params, run.train_graph, run.social, *triples, opts);

  json out = metrics_to_json(rep);
  out["checkpoint"] = ckpt_path;
  out["checkpoint_hash"] = hash_file(ckpt_path);
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_ablate(const DataArgs& d, const SplitArgs& s, const TrainArgs& t,
               std::vector<std::string> variants) {
  const fs::path out_dir = resolve_out_dir(t.out_dir);
  fs::create_directories(out_dir);
  if (variants.empty()) variants = default_variants();

  LoadedRun run = load_run(d, s);
  auto rows = ablation_report(run.train_graph, run.social, run.split_data, t.config, variants);

  const std::string table = rows_to_table(rows, "variant");
  json out;
  out["rows"] = rows_to_json(rows, "variant");
  out["data"] = data_manifest(d);
  out["tool_version"] = kToolVersion;
  std::ofstream(out_dir / "ablation.json") << out.dump(2) << "\n";
  std::ofstream(out_dir / "ablation.txt") << table;
  write_manifest_cfg(out_dir / "manifest.cfg", manifest_kv(d, s, t));
  std::cout << out.dump(2) << "\n";
  std::cerr << table;
  return kOk;
}

int cmd_sweep(const DataArgs& d, const SplitArgs& s, const TrainArgs& t,
              std::vector<std::size_t> sizes) {
  const fs::path out_dir = resolve_out_dir(t.out_dir);
  fs::create_directories(out_dir);
  if (sizes.empty()) sizes = default_sweep_sizes();

  LoadedRun run = load_run(d, s);
  auto rows = embedding_sweep(run.train_graph, run.social, run.split_data, t.config, sizes);

  const std::string table = rows_to_table(rows, "embed_dim");
  json out;
  out["rows"] = rows_to_json(rows, "embed_dim");
  out["data"] = data_manifest(d);
  out["tool_version"] = kToolVersion;
  std::ofstream(out_dir / "sweep.json") << out.dump(2) << "\n";
  std::ofstream(out_dir / "sweep.txt") << table;
  write_manifest_cfg(out_dir / "manifest.cfg", manifest_kv(d, s, t));
  std::cout << out.dump(2) << "\n";
  std::cerr << table;
  return kOk;
}

int cmd_predict(const std::string& ckpt_path, const DataArgs& d, const std::string& user_raw,
                const std::string& item_raw, bool clamp) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  DataArgs data = d;
  if (data.ratings_path.empty() && ckpt.extra.contains("data")) {
    data.ratings_path = ckpt.extra["data"].value("ratings_path", "");
    data.trust_path = ckpt.extra["data"].value("trust_path", "");
  }
  if (data.ratings_path.empty()) throw config_error("predict: no ratings file given");

  RatingGraph graph = load_ratings(data.ratings_path, data.load_options());
  SocialGraph social = load_social(data, graph, nullptr);
  check_checkpoint_compat(ckpt, graph);

  auto user = graph.user_id(user_raw);
  auto item = graph.item_id(item_raw);
  if (!user) throw validation_error("unknown user id: " + user_raw);
  if (!item) throw validation_error("unknown item id: " + item_raw);

  ForwardOptions opts;
  opts.ablation = ckpt.ablation;
  opts.neighbor_cap = ckpt.neighbor_cap;
  opts.sample_salt = derive_seed(0, "eval-sampling");
  double r = predict_rating(graph, social, ckpt.params, *user, *item, opts);
  json out;
  out["user"] = user_raw;
  out["item"] = item_raw;
  out["prediction"] = r;
  if (clamp) {
    out["prediction_clamped"] = std::clamp(r, 1.0, static_cast<double>(graph.r_max()));
    out["clamped"] = true;
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// key=value lines -> CLI tokens, inserted before the explicit flags so that
// flags win under the take-last policy. `#` lines are comments.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw graphrec::io_error("cannot open config file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim_ws(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw graphrec::parse_error(line_no, "expected key=value: " + t);
    const std::string key = trim_ws(t.substr(0, eq));
    const std::string value = trim_ws(t.substr(eq + 1));
    if (key == "symmetrize" || key == "round-ratings" || key == "clamp") {
      if (value == "true" || value == "1") tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

// Expands `--config FILE` in place: config-derived tokens precede the
// remaining explicit flags of the same subcommand.
std::vector<std::string> expand_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    }
    if (consumed == 0) continue;
    std::vector<std::string> expanded = config_tokens(path);
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), expanded.begin(), expanded.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GraphRec social recommender: attentive graph aggregation over "
               "user-item ratings and user-user trust, trained for rating prediction"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "index raw rating/trust dumps and write a load report");
  DataArgs ingest_data;
  std::string ingest_out = "out";
  add_data_options(ingest, ingest_data);
  ingest->add_option("--out", ingest_out, "output directory");

  // split
  auto* split_cmd = app.add_subcommand("split", "write a reproducible train/validation/test split");
  DataArgs split_data_args;
  SplitArgs split_args;
  std::string split_out = "out";
  add_data_options(split_cmd, split_data_args);
  add_split_options(split_cmd, split_args);
  split_cmd->add_option("--out", split_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + history");
  DataArgs train_data;
  SplitArgs train_split;
  TrainArgs train_args;
  add_data_options(train_cmd, train_data);
  add_split_options(train_cmd, train_split);
  add_train_options(train_cmd, train_args);
  std::string train_config_path;
  train_cmd->add_option("--config", train_config_path,
                        "flat key=value config; explicit flags win");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a held-out split");
  DataArgs eval_data;
  SplitArgs eval_split;
  std::string eval_ckpt;
  std::string eval_split_name = "test";
  bool eval_clamp = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--ratings", eval_data.ratings_path,
                       "ratings file (defaults to the checkpoint's)");
  eval_cmd->add_option("--trust", eval_data.trust_path, "trust file");
  eval_cmd->add_option("--r-max", eval_data.r_max, "rating scale upper bound");
  eval_cmd->add_flag("--symmetrize", eval_data.symmetrize, "symmetrize trust edges");
  eval_cmd->add_flag("--round-ratings", eval_data.round_ratings, "round non-integer ratings");
  eval_cmd->add_option("--split", eval_split_name, "train | validation | test");
  eval_cmd->add_flag("--clamp", eval_clamp, "clamp predictions into [1, r_max]");
  auto* eval_x = eval_cmd->add_option("--x", eval_split.x, "override the checkpoint's split fraction");
  eval_cmd->add_option("--split-seed", eval_split.seed, "override the checkpoint's split seed");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare model variants");
  DataArgs ablate_data;
  SplitArgs ablate_split;
  TrainArgs ablate_args;
  std::vector<std::string> ablate_variants;
  add_data_options(ablate_cmd, ablate_data);
  add_split_options(ablate_cmd, ablate_split);
  add_train_options(ablate_cmd, ablate_args);
  ablate_cmd->add_option("--variants", ablate_variants, "variant names")->delimiter(',');

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "train across embedding sizes");
  DataArgs sweep_data;
  SplitArgs sweep_split;
  TrainArgs sweep_args;
  std::vector<std::size_t> sweep_sizes;
  add_data_options(sweep_cmd, sweep_data);
  add_split_options(sweep_cmd, sweep_split);
  add_train_options(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--sizes", sweep_sizes, "embedding sizes")->delimiter(',');

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict one user-item rating");
  DataArgs predict_data;
  std::string predict_ckpt, predict_user, predict_item;
  bool predict_clamp = false;
  predict_cmd->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--ratings", predict_data.ratings_path,
                          "ratings file (defaults to the checkpoint's)");
  predict_cmd->add_option("--trust", predict_data.trust_path, "trust file");
  predict_cmd->add_option("--r-max", predict_data.r_max, "rating scale upper bound");
  predict_cmd->add_flag("--clamp", predict_clamp, "also report the clamped prediction");
  predict_cmd->add_option("user", predict_user, "raw user id as it appears in the ratings file")
      ->required();
  predict_cmd->add_option("item", predict_item, "raw item id")->required();

  try {
    std::vector<std::string> args = expand_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingFile;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_data, ingest_out);
    if (split_cmd->parsed()) return cmd_split(split_data_args, split_args, split_out);
    if (train_cmd->parsed()) return cmd_train(train_data, train_split, train_args);
    if (eval_cmd->parsed())
      return cmd_evaluate(eval_ckpt, eval_data, eval_split_name, eval_clamp,
                          eval_x->count() > 0, eval_split);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_data, ablate_split, ablate_args, ablate_variants);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_data, sweep_split, sweep_args, sweep_sizes);
    if (predict_cmd->parsed())
      return cmd_predict(predict_ckpt, predict_data, predict_user, predict_item, predict_clamp);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingFile;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const checkpoint_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadCheckpoint;
  } catch (const divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kFail;
}
