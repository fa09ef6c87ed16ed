// Acceptance suite: one pass/fail line per criterion.
//
//  1. gradient correctness against central finite differences
//  2. batched forward equals the straight-line scalar oracle
//  3. attention weight invariants over random neighbor sets
//  4. end-to-end overfit on a 20-rating fixture
//  5. directional ablation: full model beats the no-social and no-opinion
//     variants on homophilous synthetic data
//  6. directional ablation: full model beats the attention-free variant
//  7. embedding-size sweep attains its best RMSE at an interior size
//  8. metrics sanity: MAE <= RMSE and the RMSE/loss identity
//  9. (optional) desk run on the public Ciao dump, if provided locally

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "graphrec/graphrec.hpp"
#include "oracle.hpp"

using namespace graphrec;
using testutil::Fixture;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int criterion, const std::string& name, bool pass, const std::string& details) {
  std::printf("[ACCEPTANCE] %d %s: %s (%s)\n", criterion, name.c_str(),
              pass ? "PASS" : "FAIL", details.c_str());
  std::fflush(stdout);
}

GraphRecParams params_for(const Fixture& f, std::size_t d, std::uint64_t seed,
                          std::size_t depth) {
  ModelShapes s;
  s.n_users = f.graph.n_users();
  s.n_items = f.graph.n_items();
  s.r_max = f.graph.r_max();
  s.embed_dim = d;
  s.fusion_depth = depth;
  s.combine_depth = depth;
  s.predict_depth = depth;
  return init_params(s, seed);
}

// Dense 5-user / 5-item fixture for the oracle sweep.
Fixture dense_fixture() {
  Fixture f;
  std::vector<RatingTriple> triples;
  auto rng = make_rng(99);
  std::uniform_int_distribution<int> rdist(1, 5);
  for (UserId u = 0; u < 5; ++u)
    for (ItemId i = 0; i < 5; ++i)
      if ((u + i) % 2 == 0) triples.push_back({u, i, rdist(rng)});
  f.graph = RatingGraph::from_triples(triples, 5, 5);
  f.social = SocialGraph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 3}});
  for (const auto& t : triples) {
    f.pairs.emplace_back(t.user, t.item);
    f.truths.push_back(static_cast<double>(t.rating));
  }
  return f;
}

// ----- shared protocol for the directional experiments (criteria 5 and 6) --

struct DirectionalProtocol {
  std::size_t n_users = 500;
  std::size_t n_items = 300;
  std::size_t d_true = 8;
  double homophily = 0.8;
  double noise = 0.3;
  std::size_t ratings_per_user = 6;
  std::size_t social_degree = 8;
  std::size_t n_seeds = 5;

  TrainConfig train_config(std::uint64_t seed) const {
    TrainConfig c;
    c.embed_dim = 16;
    c.learning_rate = 0.003;
    c.batch_size = 64;
    c.dropout_rate = 0.0;
    c.max_epochs = 8;
    c.patience = 8;
    c.seed = seed;
    c.neighbor_cap = 8;
    c.fusion_depth = 1;
    c.combine_depth = 1;
    c.predict_depth = 1;
    c.workers = 2;
    return c;
  }
};

struct DirectionalResults {
  std::map<std::string, std::vector<double>> rmse;  // variant -> per-seed test RMSE
  double wall_seconds = 0.0;

  double mean(const std::string& variant) const {
    const auto& v = rmse.at(variant);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
};

DirectionalResults run_directional(const DirectionalProtocol& proto,
                                   const std::vector<std::string>& variants) {
  Stopwatch watch;
  DirectionalResults out;
  SynthOptions sopts;
  sopts.ratings_per_user = proto.ratings_per_user;
  sopts.social_degree = proto.social_degree;

  for (std::size_t s = 0; s < proto.n_seeds; ++s) {
    const std::uint64_t seed = 1000 + 17 * s;
    SynthData data = synth_generate(proto.n_users, proto.n_items, proto.d_true, proto.homophily,
                                    proto.noise, seed, sopts);
    DatasetSplit ds = split(data.ratings, 0.8, seed);
    RatingGraph train_graph = RatingGraph::from_triples(ds.train, data.ratings.n_users(),
                                                        data.ratings.n_items());
    TrainConfig config = proto.train_config(seed);
    auto rows = ablation_report(train_graph, data.social, ds, config, variants);
    for (const auto& row : rows) out.rmse[row.label].push_back(row.test.rmse);
    std::fprintf(stderr, "  [directional seed %zu]", s);
    for (const auto& row : rows) std::fprintf(stderr, " %s=%.4f", row.label.c_str(), row.test.rmse);
    std::fprintf(stderr, "\n");
  }
  out.wall_seconds = watch.seconds();
  return out;
}

const DirectionalResults& directional_results() {
  static DirectionalResults r =
      run_directional(DirectionalProtocol{}, {"full", "sn", "opinion", "alphabeta"});
  return r;
}

}  // namespace

TEST(Acceptance, Criterion1_GradientCorrectness) {
  Stopwatch watch;
  Fixture f = testutil::small_fixture();  // 4 users, 4 items, 6 ratings, 3 social edges
  GraphRecParams p = params_for(f, 4, 2027, 3);
  // Generic point: freshly initialized zero biases park empty-neighborhood
  // relu(b) terms exactly on the kink, where the subgradient convention and
  // central differences legitimately differ.
  testutil::jitter_params(p, 2027);

  auto rep = testutil::model_fd_check(p, f, {}, 1e-5);
  const double secs = watch.seconds();
  char details[160];
  std::snprintf(details, sizeof(details), "max rel err %.3g over %zu checks, worst %s, %.1fs",
                rep.max_rel_error, rep.checked, rep.worst_entry.c_str(), secs);
  const bool pass = rep.max_rel_error < 1e-4 && secs < 10.0;
  report(1, "gradient-correctness", pass, details);
  EXPECT_LT(rep.max_rel_error, 1e-4);
  EXPECT_LT(secs, 10.0);
}

TEST(Acceptance, Criterion2_OracleEquivalence) {
  Stopwatch watch;
  double worst = 0.0;
  std::size_t checked = 0;
  const std::vector<AblationConfig> variants{
      AblationConfig::full(),  AblationConfig::sn(),        AblationConfig::opinion(),
      AblationConfig::alpha(), AblationConfig::alphabeta(), AblationConfig::mu()};

  std::vector<Fixture> fixtures{testutil::tiny_fixture(), testutil::small_fixture(),
                                dense_fixture()};
  for (std::size_t fi = 0; fi < fixtures.size(); ++fi) {
    const Fixture& f = fixtures[fi];
    GraphRecParams p = params_for(f, 4, 300 + fi, 3);
    for (const auto& ab : variants) {
      ForwardOptions opts = testutil::eval_options(ab);
      // every scoreable pair, rated or not
      std::vector<std::pair<UserId, ItemId>> pairs;
      for (UserId u = 0; u < f.graph.n_users(); ++u)
        for (ItemId i = 0; i < f.graph.n_items(); ++i) pairs.emplace_back(u, i);
      auto fwd = forward_batch(f.graph, f.social, p, pairs, opts);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double want =
            oracle::predict(f.graph, f.social, p, ab, pairs[k].first, pairs[k].second);
        worst = std::max(worst, std::abs(fwd.predictions[k] - want));
        ++checked;
      }
    }
  }
  const double secs = watch.seconds();
  char details[128];
  std::snprintf(details, sizeof(details), "max abs diff %.3g over %zu predictions, %.2fs", worst,
                checked, secs);
  const bool pass = worst < 1e-10 && secs < 5.0;
  report(2, "oracle-equivalence", pass, details);
  EXPECT_LT(worst, 1e-10);
  EXPECT_LT(secs, 5.0);
}

TEST(Acceptance, Criterion3_AttentionInvariants) {
  Stopwatch watch;
  Fixture f = testutil::tiny_fixture();
  const std::size_t d = 8;
  auto rng = make_rng(424242);
  std::uniform_int_distribution<std::size_t> size_dist(1, 64);

  double worst_sum_err = 0.0;
  double min_weight = 1.0;
  double worst_uniform_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    GraphRecParams p = params_for(f, d, 5000 + trial, 1);
    ForwardContext ctx(f.graph, f.social, p);
    ctx.neighbor_cap = 1000;

    const std::size_t n = size_dist(rng);
    std::vector<NodeId> contexts;
    contexts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      contexts.push_back(ctx.tape.leaf(Tensor::gaussian(d, 1, 0.0, 2.0, rng)));
    NodeId target = ctx.tape.leaf(Tensor::gaussian(d, 1, 0.0, 2.0, rng));

    Tensor w = ctx.tape.value(attention_weights(ctx, contexts, target, ctx.bound.attn_item, true));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_weight = std::min(min_weight, w[i]);
      sum += w[i];
    }
    worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));

    // Zeroed w2 must reproduce the mean aggregator.
    GraphRecParams p0 = p;
    p0.attn_item.w2 = Tensor(1, d);
    ForwardContext ctx0(f.graph, f.social, p0);
    std::vector<NodeId> contexts0;
    contexts0.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      contexts0.push_back(ctx0.tape.leaf(ctx.tape.value(contexts[i])));
    NodeId target0 = ctx0.tape.leaf(ctx.tape.value(target));
    Tensor w0 =
        ctx0.tape.value(attention_weights(ctx0, contexts0, target0, ctx0.bound.attn_item, true));
    for (std::size_t i = 0; i < n; ++i)
      worst_uniform_err =
          std::max(worst_uniform_err, std::abs(w0[i] - 1.0 / static_cast<double>(n)));
  }
  const double secs = watch.seconds();
  char details[160];
  std::snprintf(details, sizeof(details),
                "1000 sets: min weight %.3g, worst sum err %.3g, worst mean-agg err %.3g, %.1fs",
                min_weight, worst_sum_err, worst_uniform_err, secs);
  const bool pass = min_weight > 0.0 && worst_sum_err < 1e-9 && worst_uniform_err < 1e-12;
  report(3, "attention-invariants", pass, details);
  EXPECT_GT(min_weight, 0.0);
  EXPECT_LT(worst_sum_err, 1e-9);
  EXPECT_LT(worst_uniform_err, 1e-12);
}

TEST(Acceptance, Criterion4_OverfitHealth) {
  Stopwatch watch;
  Fixture f = testutil::overfit_fixture();  // 20 ratings
  DatasetSplit s;
  s.train = f.graph.triples();
  s.validation = f.graph.triples();
  s.test = f.graph.triples();
  TrainConfig c = testutil::overfit_config();  // no dropout, 500 epochs
  ASSERT_EQ(c.dropout_rate, 0.0);
  ASSERT_EQ(c.max_epochs, 500u);
  ASSERT_EQ(s.train.size(), 20u);

  TrainResult r = train(f.graph, f.social, s, c, {});
  const double final_loss = r.history.back().train_loss;
  const double secs = watch.seconds();
  char details[128];
  std::snprintf(details, sizeof(details), "final training loss %.5f after %zu epochs, %.1fs",
                final_loss, r.history.size(), secs);
  const bool pass = final_loss < 0.01 && secs < 60.0;
  report(4, "overfit-health", pass, details);
  EXPECT_LT(final_loss, 0.01);
  EXPECT_LT(secs, 60.0);
}

TEST(Acceptance, Criterion5_AblationDirection) {
  const DirectionalResults& r = directional_results();
  const double full = r.mean("full");
  const double sn = r.mean("sn");
  const double opinion = r.mean("opinion");
  const double margin_sn = (sn - full) / sn;
  const double margin_opinion = (opinion - full) / opinion;

  char details[200];
  std::snprintf(details, sizeof(details),
                "mean RMSE over 5 seeds: full %.4f, sn %.4f (+%.2f%%), opinion %.4f (+%.2f%%), "
                "%.0fs total",
                full, sn, 100 * margin_sn, opinion, 100 * margin_opinion, r.wall_seconds);
  const bool pass =
      margin_sn >= 0.01 && margin_opinion >= 0.01 && r.wall_seconds < 15 * 60.0;
  report(5, "ablation-direction", pass, details);
  EXPECT_GE(margin_sn, 0.01);
  EXPECT_GE(margin_opinion, 0.01);
  EXPECT_LT(r.wall_seconds, 15 * 60.0);
}

TEST(Acceptance, Criterion6_AttentionAblationDirection) {
  const DirectionalResults& r = directional_results();
  const double full = r.mean("full");
  const double alphabeta = r.mean("alphabeta");
  char details[128];
  std::snprintf(details, sizeof(details), "mean RMSE over 5 seeds: full %.4f vs alpha&beta %.4f",
                full, alphabeta);
  const bool pass = full < alphabeta;
  report(6, "attention-ablation-direction", pass, details);
  EXPECT_LT(full, alphabeta);
}

TEST(Acceptance, Criterion7_EmbeddingSweepShape) {
  Stopwatch watch;
  const std::vector<std::size_t> sizes{8, 16, 64, 256};
  SynthOptions sopts;
  sopts.ratings_per_user = 5;
  sopts.social_degree = 6;

  std::size_t interior_best = 0;
  const std::size_t n_seeds = 5;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = 7000 + 13 * s;
    SynthData data = synth_generate(150, 100, 6, 0.8, 0.3, seed, sopts);
    DatasetSplit ds = split(data.ratings, 0.8, seed);
    RatingGraph train_graph = RatingGraph::from_triples(ds.train, data.ratings.n_users(),
                                                        data.ratings.n_items());
    TrainConfig c;
    c.embed_dim = 16;  // overridden per size
    c.learning_rate = 0.003;
    c.batch_size = 64;
    c.dropout_rate = 0.0;
    c.max_epochs = 6;
    c.patience = 6;
    c.seed = seed;
    c.neighbor_cap = 6;
    c.fusion_depth = 1;
    c.combine_depth = 1;
    c.predict_depth = 1;
    c.workers = 2;

    auto rows = embedding_sweep(train_graph, data.social, ds, c, sizes);
    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].test.rmse < rows[best_idx].test.rmse) best_idx = i;
    const bool interior = best_idx != 0 && best_idx != rows.size() - 1;
    if (interior) ++interior_best;
    std::fprintf(stderr, "  [sweep seed %zu] best d=%s;", s, rows[best_idx].label.c_str());
    for (const auto& row : rows) std::fprintf(stderr, " d%s=%.4f", row.label.c_str(), row.test.rmse);
    std::fprintf(stderr, "\n");
  }
  const double secs = watch.seconds();
  char details[128];
  std::snprintf(details, sizeof(details), "interior best in %zu of %zu seeds, %.0fs",
                interior_best, n_seeds, secs);
  const bool pass = interior_best >= 4 && secs < 30 * 60.0;
  report(7, "embedding-sweep-shape", pass, details);
  EXPECT_GE(interior_best, 4u);
  EXPECT_LT(secs, 30 * 60.0);
}

TEST(Acceptance, Criterion8_MetricsSanity) {
  // MAE <= RMSE on random prediction sets and on a real evaluation report;
  // RMSE = sqrt(2 * loss) on identical prediction sets.
  auto rng = make_rng(8888);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  double worst_identity = 0.0;
  bool mae_ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 23);
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      t[i] = u(rng);
    }
    const double m = mae(p, t), r = rmse(p, t);
    if (m > r + 1e-12) mae_ok = false;
    worst_identity = std::max(worst_identity, std::abs(r - std::sqrt(2.0 * loss(p, t))));
  }

  Fixture f = testutil::small_fixture();
  GraphRecParams params = params_for(f, 4, 808, 2);
  MetricsReport rep = evaluate(params, f.graph, f.social, f.graph.triples());
  const bool report_ok = rep.mae <= rep.rmse + 1e-12;

  char details[128];
  std::snprintf(details, sizeof(details),
                "500 random sets + 1 evaluation report, worst |rmse - sqrt(2 loss)| = %.3g",
                worst_identity);
  const bool pass = mae_ok && report_ok && worst_identity < 1e-12;
  report(8, "metrics-sanity", pass, details);
  EXPECT_TRUE(mae_ok);
  EXPECT_TRUE(report_ok);
  EXPECT_LT(worst_identity, 1e-12);
}

TEST(Acceptance, Criterion9_OptionalCiaoStretch) {
  // Requires the public Ciao dump; point GRAPHREC_CIAO_RATINGS and
  // GRAPHREC_CIAO_TRUST at local copies to enable.
  const char* ratings_path = std::getenv("GRAPHREC_CIAO_RATINGS");
  const char* trust_path = std::getenv("GRAPHREC_CIAO_TRUST");
  if (!ratings_path || !trust_path) {
    report(9, "optional-ciao-stretch", true, "SKIPPED: Ciao dump not provided");
    GTEST_SKIP() << "set GRAPHREC_CIAO_RATINGS / GRAPHREC_CIAO_TRUST to run the stretch test";
  }

  Stopwatch watch;
  LoadOptions lopts;
  lopts.round_ratings = true;
  RatingGraph graph = load_ratings(ratings_path, lopts);
  SocialGraph social = load_trust(trust_path, graph, lopts);
  DatasetSplit ds = split(graph, 0.8, 1);
  RatingGraph train_graph =
      RatingGraph::from_triples(ds.train, graph.n_users(), graph.n_items());

  TrainConfig c;  // defaults: d=64, lr=0.001, batch=128, dropout=0.5
  c.max_epochs = 30;
  c.patience = 5;
  c.seed = 1;
  c.workers = 2;
  TrainResult r = train(train_graph, social, ds, c, {});

  EvalOptions eopts;
  eopts.split_name = "test";
  MetricsReport rep = evaluate(r.best_params, train_graph, social, ds.test, eopts);
  char details[160];
  std::snprintf(details, sizeof(details), "test RMSE %.4f, MAE %.4f after %zu epochs, %.0fs",
                rep.rmse, rep.mae, r.history.size(), watch.seconds());
  const bool pass = rep.rmse <= 1.05 && rep.mae <= 0.80;
  report(9, "optional-ciao-stretch", pass, details);
  EXPECT_LE(rep.rmse, 1.05);
  EXPECT_LE(rep.mae, 0.80);
}
