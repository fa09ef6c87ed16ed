#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "graphrec/graph.hpp"

namespace graphrec {

struct SynthOptions {
  std::size_t ratings_per_user = 8;
  std::size_t social_degree = 8;
  double rating_gain = 1.5;  // scales the latent product before quantization
  int r_max = 5;
};

struct SynthData {
  RatingGraph ratings;
  SocialGraph social;
  // Ground-truth latents, row per user/item; kept for generator diagnostics.
  std::vector<std::vector<double>> user_latent;
  std::vector<std::vector<double>> item_latent;
};

namespace detail {

inline double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = std::sqrt(dot_vec(a, a));
  const double nb = std::sqrt(dot_vec(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_vec(a, b) / (na * nb);
}

}  // namespace detail

// Desk-scale testbed with controllable social signal. Users and items get
// latent vectors; ratings are quantized scaled inner products plus noise;
// social edges prefer high-latent-similarity peers with probability
// `homophily`, otherwise connect uniformly at random. At homophily 0 the
// social graph carries no information about tastes.
inline SynthData synth_generate(std::size_t n_users, std::size_t n_items, std::size_t d_true,
                                double homophily, double noise, std::uint64_t seed,
                                const SynthOptions& opts = {}) {
  if (n_users == 0 || n_items == 0 || d_true == 0)
    throw config_error("synth_generate: sizes must be positive");
  if (homophily < 0.0 || homophily > 1.0)
    throw config_error("synth_generate: homophily must be in [0, 1]");

  auto rng = make_rng(derive_seed(seed, "synth"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthData out;
  out.user_latent.assign(n_users, std::vector<double>(d_true));
  out.item_latent.assign(n_items, std::vector<double>(d_true));
  for (auto& u : out.user_latent)
    for (double& x : u) x = gauss(rng);
  for (auto& v : out.item_latent)
    for (double& x : v) x = gauss(rng);

  const double norm = 1.0 / std::sqrt(static_cast<double>(d_true));
  const double mid = (1.0 + opts.r_max) / 2.0;

  std::vector<RatingTriple> triples;
  triples.reserve(n_users * opts.ratings_per_user);
  std::vector<ItemId> item_ids(n_items);
  std::iota(item_ids.begin(), item_ids.end(), 0);
  for (std::size_t u = 0; u < n_users; ++u) {
    auto picked = sample_capped(item_ids, std::min(opts.ratings_per_user, n_items),
                                derive_seed(seed, "synth-items", u));
    for (ItemId i : picked) {
      const double raw = detail::dot_vec(out.user_latent[u], out.item_latent[i]) * norm;
      const double noisy = mid + opts.rating_gain * raw + noise * gauss(rng);
      const int level = static_cast<int>(
          std::clamp(std::llround(noisy), static_cast<long long>(1),
                     static_cast<long long>(opts.r_max)));
      triples.push_back(RatingTriple{static_cast<UserId>(u), i, level});
    }
  }
  out.ratings = RatingGraph::from_triples(std::move(triples), n_users, n_items, opts.r_max);

  // Similarity-ranked candidate lists for the homophilous edges.
  const std::size_t top_k = std::max<std::size_t>(2 * opts.social_degree, 10);
  SocialGraph social(n_users);
  std::uniform_int_distribution<std::size_t> any_user(0, n_users - 1);
  for (std::size_t u = 0; u < n_users && n_users > 1; ++u) {
    std::vector<std::pair<double, UserId>> sims;
    sims.reserve(n_users - 1);
    for (std::size_t v = 0; v < n_users; ++v) {
      if (v == u) continue;
      sims.emplace_back(detail::cosine(out.user_latent[u], out.user_latent[v]),
                        static_cast<UserId>(v));
    }
    const std::size_t k = std::min(top_k, sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::uniform_int_distribution<std::size_t> top_pick(0, k - 1);
    for (std::size_t e = 0; e < opts.social_degree; ++e) {
      UserId v;
      if (unit(rng) < homophily) {
        v = sims[top_pick(rng)].second;
      } else {
        std::size_t r = any_user(rng);
        while (r == u) r = any_user(rng);
        v = static_cast<UserId>(r);
      }
      social.add_edge(static_cast<UserId>(u), v);
    }
  }
  social.finalize();
  out.social = std::move(social);
  return out;
}

}  // namespace graphrec
