#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wqfl/rng.hpp"

namespace wqfl::quant {

/// Largest supported bit width. Level indices are stored in 64-bit words.
inline constexpr int kMaxBits = 62;

/// Header bits carrying the magnitude range (two 32-bit reals).
inline constexpr std::int64_t kDefaultHeaderBits = 64;

/// Wire representation of a stochastically quantized vector.
///
/// Magnitudes are mapped onto the 2^bits evenly spaced grid points between
/// `w_min` and `w_max`; the sign of every element travels separately.
struct QuantizedUpdate {
  double w_min = 0.0;
  double w_max = 0.0;
  int bits = 1;
  std::vector<std::uint64_t> levels;
  std::vector<std::int8_t> signs;  // -1 or +1
  std::int64_t payload_bits = 0;

  std::size_t size() const { return levels.size(); }
  std::uint64_t top_level() const { return (std::uint64_t{1} << bits) - 1; }
};

/// Stochastically quantizes `delta` with `bits` bits per magnitude.
///
/// Each |delta_j| inside grid interval [s_{k-1}, s_k] is rounded down with
/// probability (s_k - |delta_j|) / (s_k - s_{k-1}) and up otherwise, which
/// makes the reconstruction an unbiased estimate of `delta`. A zero-width
/// range is represented exactly and consumes no randomness.
///
/// Throws std::invalid_argument for empty input, bits outside
/// [1, kMaxBits] or non-finite entries.
QuantizedUpdate quantize(std::span<const double> delta, int bits, Rng& rng,
                         std::int64_t header_bits = kDefaultHeaderBits);

/// Reconstructs sign_j * (w_min + level_j * (w_max - w_min) / (2^bits - 1)).
std::vector<double> dequantize(const QuantizedUpdate& q);

/// Grid point s_k for the given range and bit width.
double grid_point(double w_min, double w_max, int bits, std::uint64_t k);

/// Upper bound on E||Q(x) - x||^2: d (w_max - w_min)^2 / (4 (2^bits - 1)^2).
double variance_bound(std::int64_t d, double w_min, double w_max, int bits);

/// Same bound expressed through delta = sqrt(d/4) (w_max - w_min).
double error_term(double delta, double bits);

/// Payload size d (bits + 1) + header_bits.
std::int64_t payload_bits(std::int64_t d, int bits, std::int64_t header_bits);

/// Range scale sqrt(d)/2 * (max|x| - min|x|) of a weight differential.
double range_scale(std::span<const double> delta);

}  // namespace wqfl::quant
