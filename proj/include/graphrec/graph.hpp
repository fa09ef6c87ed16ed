#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graphrec/common.hpp"

namespace graphrec {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

struct RatingTriple {
  UserId user;
  ItemId item;
  int rating;  // opinion level in {1..r_max}

  bool operator==(const RatingTriple&) const = default;
};

struct LoadReport {
  std::size_t lines_read = 0;
  std::size_t triples = 0;
  std::size_t duplicates = 0;   // (user,item) pairs seen more than once; last kept
  std::size_t rounded = 0;      // non-integer ratings mapped to the nearest level
  std::size_t self_loops = 0;   // trust edges (a,a), dropped
  std::size_t unknown_users = 0;  // trust endpoints absent from the rating graph, dropped
  std::size_t duplicate_edges = 0;
};

struct LoadOptions {
  int r_max = 5;
  // Raw dumps sometimes carry half-star ratings; rejected unless rounding is on.
  bool round_ratings = false;
  bool symmetrize_trust = false;
};

/// Sparse user-item interactions with opinion scores. Indexes the same triple
/// multiset by user (C(i)) and by item (B(j)). Immutable after load; safe for
/// concurrent reads.
class RatingGraph {
 public:
  RatingGraph() = default;

  static RatingGraph from_triples(std::vector<RatingTriple> triples, std::size_t n_users,
                                  std::size_t n_items, int r_max = 5) {
    RatingGraph g;
    g.n_users_ = n_users;
    g.n_items_ = n_items;
    g.r_max_ = r_max;
    g.triples_ = std::move(triples);
    for (const auto& t : g.triples_) {
      if (t.user >= n_users || t.item >= n_items)
        throw index_error("triple (" + std::to_string(t.user) + ", " + std::to_string(t.item) +
                          ") out of range for " + std::to_string(n_users) + " users / " +
                          std::to_string(n_items) + " items");
      if (t.rating < 1 || t.rating > r_max)
        throw validation_error("rating " + std::to_string(t.rating) + " outside {1.." +
                               std::to_string(r_max) + "}");
    }
    g.build_index();
    return g;
  }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  int r_max() const { return r_max_; }
  const std::vector<RatingTriple>& triples() const { return triples_; }

  const std::vector<std::pair<ItemId, int>>& items_of(UserId u) const {
    check_user(u);
    return by_user_[u];
  }

  const std::vector<std::pair<UserId, int>>& users_of(ItemId i) const {
    check_item(i);
    return by_item_[i];
  }

  // Raw-id bookkeeping, retained for export and for resolving external ids.
  const std::vector<std::string>& user_raw_ids() const { return user_raw_; }
  const std::vector<std::string>& item_raw_ids() const { return item_raw_; }

  std::optional<UserId> user_id(const std::string& raw) const {
    auto it = user_index_.find(raw);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<ItemId> item_id(const std::string& raw) const {
    auto it = item_index_.find(raw);
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
  }

  void check_user(UserId u) const {
    if (u >= n_users_)
      throw index_error("user id " + std::to_string(u) + " out of range (n_users = " +
                        std::to_string(n_users_) + ")");
  }

  void check_item(ItemId i) const {
    if (i >= n_items_)
      throw index_error("item id " + std::to_string(i) + " out of range (n_items = " +
                        std::to_string(n_items_) + ")");
  }

  friend RatingGraph load_ratings(const std::string&, const LoadOptions&, LoadReport*);

 private:
  void build_index() {
    by_user_.assign(n_users_, {});
    by_item_.assign(n_items_, {});
    for (const auto& t : triples_) {
      by_user_[t.user].emplace_back(t.item, t.rating);
      by_item_[t.item].emplace_back(t.user, t.rating);
    }
  }

  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  int r_max_ = 5;
  std::vector<RatingTriple> triples_;
  std::vector<std::vector<std::pair<ItemId, int>>> by_user_;
  std::vector<std::vector<std::pair<UserId, int>>> by_item_;
  std::vector<std::string> user_raw_;
  std::vector<std::string> item_raw_;
  std::unordered_map<std::string, UserId> user_index_;
  std::unordered_map<std::string, ItemId> item_index_;
};

/// Directed user-user trust adjacency: neighbors(i) holds N(i), sorted,
/// without self-loops or duplicates.
class SocialGraph {
 public:
  SocialGraph() = default;
  explicit SocialGraph(std::size_t n_users) : adj_(n_users) {}

  static SocialGraph from_edges(std::size_t n_users,
                                const std::vector<std::pair<UserId, UserId>>& edges) {
    SocialGraph s(n_users);
    for (auto [a, b] : edges) s.add_edge(a, b);
    s.finalize();
    return s;
  }

  void add_edge(UserId from, UserId to) {
    if (from >= adj_.size() || to >= adj_.size())
      throw index_error("social edge (" + std::to_string(from) + ", " + std::to_string(to) +
                        ") out of range (n_users = " + std::to_string(adj_.size()) + ")");
    if (from == to) return;
    adj_[from].push_back(to);
  }

  void finalize() {
    n_edges_ = 0;
    for (auto& v : adj_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      n_edges_ += v.size();
    }
  }

  std::size_t n_users() const { return adj_.size(); }
  std::size_t n_edges() const { return n_edges_; }

  const std::vector<UserId>& neighbors(UserId u) const {
    if (u >= adj_.size())
      throw index_error("user id " + std::to_string(u) + " out of range (n_users = " +
                        std::to_string(adj_.size()) + ")");
    return adj_[u];
  }

 private:
  std::vector<std::vector<UserId>> adj_;
  std::size_t n_edges_ = 0;
};

namespace detail {

// Strips comments/blank lines; returns false when the line carries no data.
inline bool strip_line(std::string& line) {
  std::size_t start = line.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) return false;
  if (line[start] == '#') return false;
  return true;
}

}  // namespace detail

// Plain text, one interaction per line: `user item rating`, whitespace
// separated, `#` comment lines ignored. Raw ids are densely re-indexed from 0
// in first-appearance order. Duplicate (user,item) pairs keep the last
// occurrence; the duplicate count lands in the report.
inline RatingGraph load_ratings(const std::string& path, const LoadOptions& opts = {},
                                LoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open ratings file: " + path);

  RatingGraph g;
  g.r_max_ = opts.r_max;
  LoadReport rep;
  std::map<std::pair<UserId, ItemId>, std::size_t> seen;  // pair -> triple index

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::strip_line(line)) continue;
    ++rep.lines_read;

    std::istringstream ss(line);
    std::string user_raw, item_raw;
    double rating_raw;
    if (!(ss >> user_raw >> item_raw >> rating_raw))
      throw parse_error(line_no, "expected `user item rating`, got: " + line);

    double rounded = std::round(rating_raw);
    if (std::abs(rating_raw - rounded) > 1e-9) {
      if (!opts.round_ratings)
        throw validation_error("line " + std::to_string(line_no) + ": non-integer rating " +
                               std::to_string(rating_raw) +
                               " (re-run with rating rounding enabled to accept)");
      ++rep.rounded;
    }
    int rating = static_cast<int>(rounded);
    if (rating < 1 || rating > opts.r_max)
      throw validation_error("line " + std::to_string(line_no) + ": rating " +
                             std::to_string(rating) + " outside {1.." +
                             std::to_string(opts.r_max) + "}");

    auto uit = g.user_index_.find(user_raw);
    UserId u;
    if (uit == g.user_index_.end()) {
      u = static_cast<UserId>(g.user_raw_.size());
      g.user_index_.emplace(user_raw, u);
      g.user_raw_.push_back(user_raw);
    } else {
      u = uit->second;
    }
    auto iit = g.item_index_.find(item_raw);
    ItemId i;
    if (iit == g.item_index_.end()) {
      i = static_cast<ItemId>(g.item_raw_.size());
      g.item_index_.emplace(item_raw, i);
      g.item_raw_.push_back(item_raw);
    } else {
      i = iit->second;
    }

    auto key = std::make_pair(u, i);
    auto sit = seen.find(key);
    if (sit != seen.end()) {
      g.triples_[sit->second].rating = rating;  // keep-last
      ++rep.duplicates;
    } else {
      seen.emplace(key, g.triples_.size());
      g.triples_.push_back(RatingTriple{u, i, rating});
    }
  }

  g.n_users_ = g.user_raw_.size();
  g.n_items_ = g.item_raw_.size();
  rep.triples = g.triples_.size();
  g.build_index();
  if (report) *report = rep;
  return g;
}

// Trust file: `truster trustee` per line. A line (a, b) puts b into N(a):
// the trusted user b informs a's social-space factor. Endpoints unknown to
// the rating graph are dropped with a count, as are self-loops.
inline SocialGraph load_trust(const std::string& path, const RatingGraph& graph,
                              const LoadOptions& opts = {}, LoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open trust file: " + path);

  SocialGraph s(graph.n_users());
  LoadReport rep;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::strip_line(line)) continue;
    ++rep.lines_read;

    std::istringstream ss(line);
    std::string a_raw, b_raw;
    if (!(ss >> a_raw >> b_raw))
      throw parse_error(line_no, "expected `truster trustee`, got: " + line);

    auto a = graph.user_id(a_raw);
    auto b = graph.user_id(b_raw);
    if (!a || !b) {
      ++rep.unknown_users;
      continue;
    }
    if (*a == *b) {
      ++rep.self_loops;
      continue;
    }
    s.add_edge(*a, *b);
    if (opts.symmetrize_trust) s.add_edge(*b, *a);
  }
  s.finalize();
  if (report) *report = rep;
  return s;
}

inline void export_ratings(const RatingGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write ratings file: " + path);
  const auto& ur = g.user_raw_ids();
  const auto& ir = g.item_raw_ids();
  for (const auto& t : g.triples()) {
    if (t.user < ur.size() && t.item < ir.size())
      out << ur[t.user] << '\t' << ir[t.item] << '\t' << t.rating << '\n';
    else
      out << t.user << '\t' << t.item << '\t' << t.rating << '\n';
  }
}

struct DatasetSplit {
  std::vector<RatingTriple> train;
  std::vector<RatingTriple> validation;
  std::vector<RatingTriple> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
};

namespace detail {

// Stable Fisher-Yates; std::shuffle's algorithm is not pinned across
// standard library versions, and split manifests promise replayability.
template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> d(0, i - 1);
    std::swap(v[i - 1], v[d(rng)]);
  }
}

}  // namespace detail

// x fraction to train, (1-x)/2 each to validation and test, by seeded uniform
// permutation then contiguous slicing.
inline DatasetSplit split(const RatingGraph& graph, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw config_error("train fraction must be in (0, 1), got " + std::to_string(train_fraction));
  const std::size_t n = graph.triples().size();
  if (n < 3) throw contract_error("need at least 3 ratings to split, have " + std::to_string(n));

  std::vector<RatingTriple> shuffled = graph.triples();
  auto rng = make_rng(derive_seed(seed, "split"));
  detail::fisher_yates(shuffled, rng);

  const std::size_t n_holdout =
      static_cast<std::size_t>(std::llround((1.0 - train_fraction) / 2.0 * n));
  const std::size_t n_val = std::max<std::size_t>(1, n_holdout);
  const std::size_t n_test = n_val;
  if (n_val + n_test >= n)
    throw contract_error("split leaves no training data");
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit out;
  out.seed = seed;
  out.train_fraction = train_fraction;
  out.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  out.validation.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  out.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return out;
}

using ExcludePair = std::optional<std::pair<UserId, ItemId>>;

// Training-set interactions of a user. When `exclude` names the pair being
// scored, that edge is omitted: the leakage guard keeps the ground-truth
// opinion out of its own prediction.
inline std::vector<std::pair<ItemId, int>> neighbors_C(const RatingGraph& graph, UserId user,
                                                       ExcludePair exclude = std::nullopt) {
  const auto& all = graph.items_of(user);
  std::vector<std::pair<ItemId, int>> out;
  out.reserve(all.size());
  for (const auto& [item, rating] : all) {
    if (exclude && exclude->first == user && exclude->second == item) continue;
    out.emplace_back(item, rating);
  }
  return out;
}

inline std::vector<std::pair<UserId, int>> neighbors_B(const RatingGraph& graph, ItemId item,
                                                       ExcludePair exclude = std::nullopt) {
  const auto& all = graph.users_of(item);
  std::vector<std::pair<UserId, int>> out;
  out.reserve(all.size());
  for (const auto& [user, rating] : all) {
    if (exclude && exclude->first == user && exclude->second == item) continue;
    out.emplace_back(user, rating);
  }
  return out;
}

inline const std::vector<UserId>& neighbors_N(const SocialGraph& social, UserId user) {
  return social.neighbors(user);
}

// Uniform subsample without replacement, capped at `cap` (0 = no cap).
// Power-law nodes would otherwise make full aggregation intractable.
template <typename T>
std::vector<T> sample_capped(std::vector<T> items, std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || items.size() <= cap) return items;
  auto rng = make_rng(seed);
  // Partial Fisher-Yates: first `cap` slots become the sample.
  for (std::size_t i = 0; i < cap; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, items.size() - 1);
    std::swap(items[i], items[d(rng)]);
  }
  items.resize(cap);
  return items;
}

}  // namespace graphrec
