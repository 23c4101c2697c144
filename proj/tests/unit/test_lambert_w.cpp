#include <gtest/gtest.h>

#include <cmath>

#include "golden.hpp"
#include "wqfl/lambert_w.hpp"

namespace {

using wqfl::lambert_w0;

TEST(LambertW, SpecialPoints) {
  EXPECT_EQ(lambert_w0(0.0), 0.0);
  EXPECT_DOUBLE_EQ(lambert_w0(-std::exp(-1.0)), -1.0);
  const double omega = load_golden("channel_golden.json")["lambert_w0_at_1"];
  EXPECT_NEAR(lambert_w0(1.0), omega, 1e-15);
  EXPECT_NEAR(lambert_w0(std::exp(1.0)), 1.0, 1e-15);
}

TEST(LambertW, DomainError) {
  EXPECT_THROW(lambert_w0(-0.5), std::domain_error);
  EXPECT_THROW(lambert_w0(-1.0), std::domain_error);
  EXPECT_TRUE(std::isnan(lambert_w0(NAN)));
}

TEST(LambertW, ResidualOnGrid) {
  const double e_inv = std::exp(-1.0);
  for (int i = 0; i <= 2000; ++i) {
    const double x = -e_inv + std::pow(10.0, -9.0 + 15.0 * i / 2000.0);
    const double w = lambert_w0(x);
    EXPECT_GE(w, -1.0);
    const double r = w * std::exp(w) - x;
    EXPECT_LE(std::abs(x) <= 1.0 ? std::abs(r) : std::abs(r / x), 1e-12) << x;
  }
}

}  // namespace
