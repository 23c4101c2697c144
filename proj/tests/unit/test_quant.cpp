#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wqfl/quant.hpp"
#include "wqfl/rng.hpp"

namespace {

using namespace wqfl;

std::vector<double> uniform_vector(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

TEST(Quantize, ZeroRangeIsExact) {
  Rng rng(1);
  const std::vector<double> x{0.5, 0.5};
  const auto before = rng;
  const auto q = quant::quantize(x, 3, rng);
  EXPECT_EQ(quant::dequantize(q), x);
  EXPECT_EQ(rng, before);  // no randomness consumed
}

TEST(Quantize, OneBitProbabilities) {
  // |x| = 0.3 on the grid {0, 1}: level 1 with probability 0.3.
  const std::vector<double> x{0.0, 0.3, 1.0};
  Rng rng(7);
  const int n = 200000;
  int ups = 0;
  for (int i = 0; i < n; ++i) ups += quant::quantize(x, 1, rng).levels[1] == 1;
  const double p = static_cast<double>(ups) / n;
  const double se = std::sqrt(0.3 * 0.7 / n);
  EXPECT_NEAR(p, 0.3, 4.0 * se);
}

TEST(Quantize, RangeAndSigns) {
  const std::vector<double> x{-0.9, 0.2, 0.0, 0.5};
  Rng rng(3);
  const auto q = quant::quantize(x, 4, rng);
  EXPECT_DOUBLE_EQ(q.w_min, 0.0);
  EXPECT_DOUBLE_EQ(q.w_max, 0.9);
  EXPECT_EQ(q.signs[0], -1);
  EXPECT_EQ(q.signs[2], 1);  // zero stored with a positive sign
  EXPECT_EQ(q.payload_bits, 4 * 5 + 64);
  for (auto k : q.levels) EXPECT_LE(k, q.top_level());
}

TEST(Quantize, RejectsBadInput) {
  Rng rng(1);
  const std::vector<double> ok{1.0, 2.0};
  EXPECT_THROW(quant::quantize(ok, 0, rng), std::invalid_argument);
  EXPECT_THROW(quant::quantize(ok, quant::kMaxBits + 1, rng), std::invalid_argument);
  EXPECT_THROW(quant::quantize(std::vector<double>{}, 2, rng), std::invalid_argument);
  EXPECT_THROW(quant::quantize(std::vector<double>{1.0, NAN}, 2, rng), std::invalid_argument);
  EXPECT_THROW(quant::quantize(std::vector<double>{1.0, INFINITY}, 2, rng), std::invalid_argument);
}

TEST(Quantize, SupportAndErrorPerElement) {
  Rng rng(11);
  const auto x = uniform_vector(500, rng);
  for (int bits : {1, 2, 3, 8}) {
    const auto q = quant::quantize(x, bits, rng);
    const auto y = quant::dequantize(q);
    const double step = (q.w_max - q.w_min) / (std::exp2(bits) - 1.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      EXPECT_LE(std::abs(y[j] - x[j]), step * (1 + 1e-12));
      EXPECT_GE(std::abs(y[j]), q.w_min);
      EXPECT_LE(std::abs(y[j]), q.w_max);
      // Reconstructed magnitude is one of the grid points.
      const double pos = (std::abs(y[j]) - q.w_min) / step;
      EXPECT_NEAR(pos, std::round(pos), 1e-9);
    }
  }
}

TEST(Quantize, GridAlignedRoundTrip) {
  const double lo = 0.125;
  const double hi = 2.125;
  const int bits = 3;
  std::vector<double> x;
  for (std::uint64_t k = 0; k < 8; ++k) {
    const double s = quant::grid_point(lo, hi, bits, k);
    x.push_back(k % 2 ? -s : s);
  }
  Rng rng(5);
  EXPECT_EQ(quant::dequantize(quant::quantize(x, bits, rng)), x);
}

TEST(Quantize, UnbiasedAndWithinBound) {
  Rng rng(21);
  const auto x = uniform_vector(100, rng);
  const int draws = 20000;
  for (int bits : {1, 2}) {
    std::vector<double> sum(x.size(), 0.0), sum2(x.size(), 0.0);
    double mse = 0.0;
    for (int i = 0; i < draws; ++i) {
      const auto y = quant::dequantize(quant::quantize(x, bits, rng));
      for (std::size_t j = 0; j < x.size(); ++j) {
        sum[j] += y[j];
        sum2[j] += y[j] * y[j];
        mse += (y[j] - x[j]) * (y[j] - x[j]);
      }
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double mean = sum[j] / draws;
      const double var = std::max(sum2[j] / draws - mean * mean, 0.0);
      EXPECT_NEAR(mean, x[j], 4.0 * std::sqrt(var / draws) + 1e-12) << "coordinate " << j;
    }
    const auto q = quant::quantize(x, bits, rng);
    EXPECT_LE(mse / draws, quant::variance_bound(100, q.w_min, q.w_max, bits));
  }
}

TEST(Dequantize, Examples) {
  quant::QuantizedUpdate q;
  q.w_min = 0.2;
  q.w_max = 0.9;
  q.bits = 1;
  q.levels = {1, 0};
  q.signs = {-1, 1};
  const auto y = quant::dequantize(q);
  EXPECT_DOUBLE_EQ(y[0], -0.9);
  EXPECT_DOUBLE_EQ(y[1], 0.2);
}

TEST(VarianceBound, Formula) {
  EXPECT_DOUBLE_EQ(quant::variance_bound(4, 1.0, 3.0, 2), 4.0 / 9.0);
  EXPECT_LT(quant::variance_bound(100, 0.0, 1.0, 60), 1e-30);
  EXPECT_DOUBLE_EQ(quant::error_term(2.0, 2.0), 4.0 / 9.0);
}

TEST(PayloadBits, Examples) {
  EXPECT_EQ(quant::payload_bits(23860, 16, 64), 405684);
  EXPECT_EQ(quant::payload_bits(1, 1, 0), 2);
  EXPECT_EQ(quant::payload_bits(23860, 1, 64), 47784);
  for (int b = 1; b < 40; ++b) {
    EXPECT_LT(quant::payload_bits(100, b, 64), quant::payload_bits(100, b + 1, 64));
  }
  EXPECT_EQ(quant::payload_bits(200, 5, 0), 2 * quant::payload_bits(100, 5, 0));
}

TEST(RangeScale, Definition) {
  const std::vector<double> x{-3.0, 1.0, 0.5, 2.0};
  EXPECT_DOUBLE_EQ(quant::range_scale(x), 0.5 * 2.0 * 2.5);
}

}  // namespace
