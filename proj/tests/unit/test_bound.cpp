#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wqfl/bound.hpp"

namespace {

using namespace wqfl::bound;

BoundConstants example() {
  BoundConstants k;
  k.L = 4;
  k.mu = 1;
  k.G2 = 2;
  k.sigma2 = {1, 1};
  k.Gamma = 0.5;
  k.tau = 3;
  k.gamma = 5;
  k.Delta0 = 2;
  return k;
}

TEST(Bound, UExamples) {
  EXPECT_DOUBLE_EQ(compute_U(example()), 90.0);
  auto k = example();
  k.tau = 1;
  EXPECT_DOUBLE_EQ(compute_U(k), 2.0 + 2.0 + 2.0 * 4 * 0.5);
  k.G2 = 0;
  k.sigma2 = {0, 0};
  k.Gamma = 0;
  EXPECT_EQ(compute_U(k), 0.0);
}

TEST(Bound, Validation) {
  auto k = example();
  k.gamma = 4;  // must exceed L/mu = 4
  EXPECT_THROW(k.validate(), std::invalid_argument);
  k = example();
  k.mu = 5;  // L < mu
  EXPECT_THROW(k.validate(), std::invalid_argument);
  k = example();
  k.sigma2[0] = -1;
  EXPECT_THROW(k.validate(), std::invalid_argument);
  const std::vector<double> p{0.5, 0.5};
  EXPECT_THROW(convergence_bound(0, example(), [](int, std::size_t) { return 0.0; }, p),
               std::invalid_argument);
}

TEST(Bound, LosslessFirstTerm) {
  const auto k = example();
  const std::vector<double> p{0.5, 0.5};
  auto zero = [](int, std::size_t) { return 0.0; };
  double prev = INFINITY;
  for (int T : {1, 2, 10, 100, 1000}) {
    const auto b = convergence_bound(T, k, zero, p);
    EXPECT_EQ(b.gap_term, 0.0);
    const double expect = 0.5 * k.L * (4 * 90.0 / (k.mu * k.mu) + k.gamma * k.Delta0) / (k.gamma + T);
    EXPECT_NEAR(b.total / expect, 1.0, 1e-14);
    EXPECT_LT(b.total, prev);
    prev = b.total;
  }
}

TEST(Bound, DiscountMatchesDirectProduct) {
  const double gamma = 7.5;
  const int T = 300;
  const auto w = discount_weights(T, gamma);
  for (int j : {0, 1, 50, 150, 298, 299}) {
    long double direct = 1.0L;
    for (int i = j + 1; i <= T - 1; ++i) direct *= 1.0L - 2.0L / (gamma + i);
    EXPECT_NEAR(w[j] / static_cast<double>(direct), 1.0, 1e-12) << j;
    EXPECT_NEAR(discount_weight(j, T, gamma) / w[j], 1.0, 1e-12);
  }
  EXPECT_EQ(w[T - 1], 1.0);
  for (int j = 1; j < T; ++j) EXPECT_GT(w[j], w[j - 1]);
}

TEST(Bound, GapLinearInJ2) {
  const auto k = example();
  const std::vector<double> p{0.3, 0.7};
  auto j2 = [](int j, std::size_t n) { return 0.01 * (1 + n) / (1.0 + j); };
  auto j2x2 = [&](int j, std::size_t n) { return 2.0 * j2(j, n); };
  const auto a = convergence_bound(50, k, j2, p);
  const auto b = convergence_bound(50, k, j2x2, p);
  EXPECT_NEAR(b.gap_term, 2.0 * a.gap_term, 1e-12 * a.gap_term);
  EXPECT_EQ(a.first_term, b.first_term);
  EXPECT_DOUBLE_EQ(a.total, a.first_term + a.gap_term);
}

TEST(Bound, LargeHorizonNoUnderflow) {
  auto k = example();
  k.gamma = 1e3;
  k.L = 1;
  const std::vector<double> p{1.0, 0.0};
  const auto b = convergence_bound(200000, k, [](int, std::size_t) { return 1e-3; }, p);
  EXPECT_TRUE(std::isfinite(b.gap_term));
  EXPECT_GT(b.gap_term, 0.0);
}

}  // namespace
