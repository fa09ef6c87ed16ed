#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graphrec {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between tensors; message names both shapes.
struct shape_error : error {
  using error::error;
};

// Malformed input line; carries the 1-based line number.
struct parse_error : error {
  std::size_t line;
  parse_error(std::size_t line_no, const std::string& what)
      : error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct validation_error : error {
  using error::error;
};

struct io_error : error {
  using error::error;
};

struct config_error : error {
  using error::error;
};

// API precondition violated by the caller.
struct contract_error : error {
  using error::error;
};

struct index_error : error {
  using error::error;
};

struct checkpoint_error : error {
  using error::error;
};

// Training loss became non-finite; names the epoch and batch.
struct divergence_error : error {
  std::size_t epoch;
  std::size_t batch;
  divergence_error(std::size_t e, std::size_t b)
      : error("training diverged: non-finite loss at epoch " + std::to_string(e) +
              ", batch " + std::to_string(b)),
        epoch(e),
        batch(b) {}
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// All randomness flows from one root seed, expanded per purpose so that
// init / shuffle / dropout / split streams can be varied independently.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
  return splitmix64(root ^ fnv1a64(purpose));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index) {
  return splitmix64(derive_seed(root, purpose) ^ splitmix64(index));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Content hash of a file, hex-encoded; used in manifests and reports.
inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

inline std::string hash_hex(std::uint64_t h) {
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

inline constexpr std::string_view kToolVersion = "graphrec 1.0.0";

}  // namespace graphrec
