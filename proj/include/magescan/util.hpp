#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace magescan {

// FNV-1a, used for every persisted hash (schema ids, config hashes, seed
// derivation). std::hash is implementation-defined and must not leak into
// artifacts.
inline std::uint64_t fnv1a(std::string_view data,
                           std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic per-stage / per-item seed derivation from one global seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx/",
                static_cast<unsigned long long>(root));
  return fnv1a(tag, fnv1a(buf));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*s#%llu", static_cast<int>(tag.size()),
                tag.data(), static_cast<unsigned long long>(index));
  return derive_seed(root, buf);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Fixed-point decimal formatting; all artifact numbers go through these so
// output never depends on locale or iostream state.
inline std::string fmt_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

// Shortest exact round-trip representation, for persisted feature values.
inline std::string fmt_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == x) {
    // try shorter forms that still round-trip
    for (int prec = 1; prec < 17; ++prec) {
      char b2[64];
      std::snprintf(b2, sizeof(b2), "%.*g", prec, x);
      double r = 0.0;
      std::sscanf(b2, "%lg", &r);
      if (r == x) return b2;
    }
  }
  return buf;
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Minimal CSV support: fields are quoted only when they contain a comma,
// quote, or newline.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> csv_parse(std::string_view text);

// Renders an aligned text table (header + rows, left-aligned first column,
// right-aligned numeric columns).
std::string text_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

}  // namespace magescan
