#include "wqfl/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wqfl::quant {
namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > kMaxBits) {
    throw std::invalid_argument("quantization bits must lie in [1, " +
                                std::to_string(kMaxBits) + "], got " +
                                std::to_string(bits));
  }
}

double level_count(int bits) { return std::ldexp(1.0, bits) - 1.0; }

}  // namespace

double grid_point(double w_min, double w_max, int bits, std::uint64_t k) {
  const std::uint64_t top = (std::uint64_t{1} << bits) - 1;
  if (k >= top) return w_max;
  if (k == 0) return w_min;
  const double step = (w_max - w_min) / level_count(bits);
  return w_min + static_cast<double>(k) * step;
}

QuantizedUpdate quantize(std::span<const double> delta, int bits, Rng& rng,
                         std::int64_t header_bits) {
  check_bits(bits);
  if (delta.empty()) throw std::invalid_argument("cannot quantize an empty vector");

  QuantizedUpdate q;
  q.bits = bits;
  q.w_min = std::numeric_limits<double>::infinity();
  q.w_max = 0.0;
  for (double x : delta) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite entry in weight differential");
    const double a = std::abs(x);
    q.w_min = std::min(q.w_min, a);
    q.w_max = std::max(q.w_max, a);
  }

  const std::size_t d = delta.size();
  q.levels.assign(d, 0);
  q.signs.resize(d);
  q.payload_bits = payload_bits(static_cast<std::int64_t>(d), bits, header_bits);
  for (std::size_t j = 0; j < d; ++j) q.signs[j] = delta[j] < 0.0 ? -1 : 1;

  const double range = q.w_max - q.w_min;
  if (range == 0.0) return q;

  const std::uint64_t top = q.top_level();
  const double scale = level_count(bits) / range;
  // Positions within 64 ulps of a grid point are treated as lying on it.
  constexpr double kSnap = 64.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t j = 0; j < d; ++j) {
    const double a = std::abs(delta[j]);
    if (a >= q.w_max) {
      q.levels[j] = top;
      continue;
    }
    const double pos = (a - q.w_min) * scale;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= kSnap * std::max(1.0, pos)) {
      q.levels[j] = std::min(static_cast<std::uint64_t>(nearest), top);
      continue;
    }
    const double lower = std::floor(pos);
    auto k = static_cast<std::uint64_t>(lower);
    if (k >= top) {
      q.levels[j] = top;
      continue;
    }
    // Probability of rounding up: (|x| - s_k) / (s_{k+1} - s_k).
    if (uniform01(rng) < pos - lower) ++k;
    q.levels[j] = k;
  }
  return q;
}

std::vector<double> dequantize(const QuantizedUpdate& q) {
  std::vector<double> out(q.levels.size());
  const std::uint64_t top = q.top_level();
  const double step = (q.w_max - q.w_min) / level_count(q.bits);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::uint64_t k = q.levels[j];
    double mag;
    if (k == 0)
      mag = q.w_min;
    else if (k >= top)
      mag = q.w_max;
    else
      mag = q.w_min + static_cast<double>(k) * step;
    out[j] = q.signs[j] < 0 ? -mag : mag;
  }
  return out;
}

double variance_bound(std::int64_t d, double w_min, double w_max, int bits) {
  if (bits < 1) throw std::invalid_argument("bits must be >= 1");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (w_min < 0.0 || w_max < w_min) throw std::invalid_argument("need 0 <= w_min <= w_max");
  const double range = w_max - w_min;
  const double levels = level_count(bits);
  return static_cast<double>(d) * range * range / (4.0 * levels * levels);
}

double error_term(double delta, double bits) {
  const double levels = std::exp2(bits) - 1.0;
  return delta * delta / (levels * levels);
}

std::int64_t payload_bits(std::int64_t d, int bits, std::int64_t header_bits) {
  if (d < 1 || bits < 1 || header_bits < 0) {
    throw std::invalid_argument("payload_bits: need d >= 1, bits >= 1, header >= 0");
  }
  return d * (bits + 1) + header_bits;
}

double range_scale(std::span<const double> delta) {
  if (delta.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : delta) {
    lo = std::min(lo, std::abs(x));
    hi = std::max(hi, std::abs(x));
  }
  return 0.5 * std::sqrt(static_cast<double>(delta.size())) * (hi - lo);
}

}  // namespace wqfl::quant
