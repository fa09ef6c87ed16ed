#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphrec/model.hpp"
#include "graphrec/params.hpp"

namespace graphrec {

/// Self-describing binary container: 8-byte magic, little-endian u64 header
/// length, JSON header (shapes, seeds, ablation, named tensor manifest),
/// then raw float64 payloads in manifest order. Raw IEEE-754 bytes round-trip
/// bit-exactly.
struct Checkpoint {
  GraphRecParams params;
  AblationConfig ablation;
  std::uint64_t seed = 0;
  std::size_t neighbor_cap = 64;
  nlohmann::json extra;  // training config echo, data hashes
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'G', 'R', 'E', 'C', 'K', 'P', 'T', '\n'};

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);

  auto entries = param_entries(ckpt.params);
  nlohmann::json header;
  header["format"] = "graphrec-checkpoint";
  header["version"] = 1;
  const ModelShapes& s = ckpt.params.shapes;
  header["shapes"] = {{"n_users", s.n_users},     {"n_items", s.n_items},
                      {"r_max", s.r_max},         {"embed_dim", s.embed_dim},
                      {"fusion_depth", s.fusion_depth}, {"combine_depth", s.combine_depth},
                      {"predict_depth", s.predict_depth}};
  header["ablation"] = {{"use_social", ckpt.ablation.use_social},
                        {"use_opinion", ckpt.ablation.use_opinion},
                        {"attn_item", ckpt.ablation.attn_item_on},
                        {"attn_social", ckpt.ablation.attn_social_on},
                        {"attn_user", ckpt.ablation.attn_user_on}};
  header["seed"] = ckpt.seed;
  header["neighbor_cap"] = ckpt.neighbor_cap;
  header["extra"] = ckpt.extra;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : entries)
    tensors.push_back({{"name", e.name}, {"rows", e.tensor->rows()}, {"cols", e.tensor->cols()}});
  header["tensors"] = tensors;

  const std::string hs = header.dump();
  out.write(detail::kCkptMagic, 8);
  detail::write_u64(out, hs.size());
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& e : entries) {
    out.write(reinterpret_cast<const char*>(e.tensor->data()),
              static_cast<std::streamsize>(e.tensor->size() * sizeof(double)));
  }
  if (!out) throw io_error("short write on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw checkpoint_error("not a checkpoint file: " + path);
  const std::uint64_t hlen = detail::read_u64(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw checkpoint_error("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error("bad checkpoint header: " + std::string(e.what()));
  }
  if (header.value("version", 0) != 1)
    throw checkpoint_error("unsupported checkpoint version");

  Checkpoint ckpt;
  const auto& sh = header.at("shapes");
  ModelShapes shapes;
  shapes.n_users = sh.at("n_users").get<std::size_t>();
  shapes.n_items = sh.at("n_items").get<std::size_t>();
  shapes.r_max = sh.at("r_max").get<int>();
  shapes.embed_dim = sh.at("embed_dim").get<std::size_t>();
  shapes.fusion_depth = sh.at("fusion_depth").get<std::size_t>();
  shapes.combine_depth = sh.at("combine_depth").get<std::size_t>();
  shapes.predict_depth = sh.at("predict_depth").get<std::size_t>();

  // Rebuild the parameter skeleton, then overwrite payloads in manifest order.
  ckpt.params = init_params(shapes, 0);
  const auto& ab = header.at("ablation");
  ckpt.ablation.use_social = ab.at("use_social").get<bool>();
  ckpt.ablation.use_opinion = ab.at("use_opinion").get<bool>();
  ckpt.ablation.attn_item_on = ab.at("attn_item").get<bool>();
  ckpt.ablation.attn_social_on = ab.at("attn_social").get<bool>();
  ckpt.ablation.attn_user_on = ab.at("attn_user").get<bool>();
  ckpt.seed = header.value("seed", std::uint64_t(0));
  ckpt.neighbor_cap = header.value("neighbor_cap", std::size_t(64));
  ckpt.extra = header.value("extra", nlohmann::json::object());

  auto entries = param_entries(ckpt.params);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != entries.size())
    throw checkpoint_error("checkpoint tensor manifest does not match this build");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != entries[i].name ||
        t.at("rows").get<std::size_t>() != entries[i].tensor->rows() ||
        t.at("cols").get<std::size_t>() != entries[i].tensor->cols())
      throw checkpoint_error("checkpoint tensor " + t.at("name").get<std::string>() +
                             " does not match expected layout");
    in.read(reinterpret_cast<char*>(entries[i].tensor->data()),
            static_cast<std::streamsize>(entries[i].tensor->size() * sizeof(double)));
    if (!in) throw checkpoint_error("truncated checkpoint payload: " + path);
  }
  return ckpt;
}

// Shape compatibility against the graphs a caller wants to score.
inline void check_checkpoint_compat(const Checkpoint& ckpt, const RatingGraph& graph) {
  const ModelShapes& s = ckpt.params.shapes;
  if (s.n_users != graph.n_users() || s.n_items != graph.n_items() ||
      s.r_max != graph.r_max())
    throw checkpoint_error(
        "checkpoint shapes (" + std::to_string(s.n_users) + " users, " +
        std::to_string(s.n_items) + " items, r_max " + std::to_string(s.r_max) +
        ") incompatible with graph (" + std::to_string(graph.n_users()) + " users, " +
        std::to_string(graph.n_items()) + " items, r_max " + std::to_string(graph.r_max()) + ")");
}

}  // namespace graphrec
