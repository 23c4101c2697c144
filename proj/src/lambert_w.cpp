#include "wqfl/lambert_w.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wqfl {
namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e

double initial_guess(double x) {
  if (x < -0.25) {
    // Series around the branch point in p = sqrt(2 (e x + 1)).
    const double p = std::sqrt(std::max(0.0, 2.0 * (M_E * x + 1.0)));
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)));
  }
  if (x < 3.0) {
    // log1p(x) has the right value at 0 and stays within ~30% up to 3.
    return 0.6 * std::log1p(x) + (x < 0.0 ? 0.4 * x : 0.0);
  }
  const double l1 = std::log(x);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x)) return x;
  if (x < -kInvE) {
    // Allow the rounding of -1/e itself.
    if (x < -kInvE * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
      throw std::domain_error("lambert_w0: argument below -1/e");
    }
    return -1.0;
  }
  if (x == 0.0) return 0.0;
  if (x == -kInvE) return -1.0;
  if (std::isinf(x)) return x;

  double w = initial_guess(x);
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 <= 0.0) {
      w = -1.0 + 1e-8;
      continue;
    }
    // Halley step.
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0) break;
    const double step = f / denom;
    w -= step;
    if (w < -1.0) w = -1.0 + 0.5 * std::abs(step);
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace wqfl
