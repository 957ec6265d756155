#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <sstream>
#include <vector>

namespace coevo {

/// All randomness in the engine flows through these helpers instead of
/// <random> distributions, whose output is implementation-defined. The
/// mt19937_64 sequence itself is pinned by the standard, so runs are
/// reproducible across toolchains.
using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combine for deriving stream seeds from (seed, tag, ids).
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t hash_str(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) h = hash_combine(h, c);
  return hash_combine(h, s.size());
}

/// Uniform double in [0, 1) using the top 53 bits.
inline double uniform01(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = g();
  } while (r >= bound);
  return r % n;
}

/// Uniform double in [lo, hi).
inline double uniform_range(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

/// Fisher-Yates shuffle with the pinned integer helper.
template <typename T>
void shuffle(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Sample k distinct indices from [0, n) without replacement.
inline std::vector<std::size_t> sample_indices(Rng& g, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_below(g, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

/// Exact textual round-trip of engine state for checkpoints.
inline std::string rng_state_to_string(const Rng& g) {
  std::ostringstream os;
  os << g;
  return os.str();
}

inline Rng rng_state_from_string(const std::string& s) {
  Rng g;
  std::istringstream is(s);
  is >> g;
  return g;
}

}  // namespace coevo
