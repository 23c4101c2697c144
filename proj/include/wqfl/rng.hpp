#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

namespace wqfl {

using Rng = std::mt19937_64;

// Independent streams derived from one master seed. Each consumer of
// randomness in an experiment owns one of these so that changing how many
// draws one consumer makes never shifts another consumer's sequence.
enum class Stream : std::uint32_t {
  placement = 1,
  fading = 2,
  training = 3,
  quantization = 4,
  partition = 5,
  dataset = 6,
  init = 7,
};

/// Seeds a generator from the master seed, a stream tag and any number of
/// extra indices (user id, round, ...).
inline Rng derive_rng(std::uint64_t master, Stream stream,
                      std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * path.size());
  words.push_back(static_cast<std::uint32_t>(master));
  words.push_back(static_cast<std::uint32_t>(master >> 32));
  words.push_back(static_cast<std::uint32_t>(stream));
  for (auto v : path) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Uniform double in [0, 1). Implemented directly on the 64-bit output so
/// results do not depend on the standard library's distribution code.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unit-mean exponential variate.
inline double exponential1(Rng& rng) { return -std::log1p(-uniform01(rng)); }

/// Standard normal variate (Box-Muller, one output per call).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace wqfl
