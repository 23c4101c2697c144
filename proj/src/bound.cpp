#include "wqfl/bound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wqfl::bound {
namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void BoundConstants::validate() const {
  if (!(mu > 0.0) || !(L >= mu) || !std::isfinite(L)) {
    throw std::invalid_argument("need L >= mu > 0");
  }
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (!(gamma > std::max({2.0, 2.0 / mu, L / mu})) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must exceed max(2, 2/mu, L/mu)");
  }
  if (!finite_nonneg(G2) || !finite_nonneg(Gamma) || !finite_nonneg(Delta0)) {
    throw std::invalid_argument("G2, Gamma and Delta0 must be finite and >= 0");
  }
  for (double s : sigma2) {
    if (!finite_nonneg(s)) throw std::invalid_argument("sigma2 entries must be finite and >= 0");
  }
}

double compute_U(const BoundConstants& k) {
  k.validate();
  const double t = k.tau;
  double sigma_sum = 0.0;
  for (double s : k.sigma2) sigma_sum += s;
  return t * t * sigma_sum + t * k.G2 + 2.0 * k.L * t * t * k.Gamma +
         (k.mu + 2.0) * t * (t - 1.0) * (2.0 * t - 1.0) / 6.0 * k.G2;
}

double discount_weight(int j, int T, double gamma) {
  double log_w = 0.0;
  for (int i = j + 1; i <= T - 1; ++i) log_w += std::log1p(-2.0 / (gamma + i));
  return std::exp(log_w);
}

std::vector<double> discount_weights(int T, double gamma) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(gamma > 2.0)) throw std::invalid_argument("gamma must exceed 2");
  std::vector<double> w(T);
  // Suffix sums of the log factors, from the last round backwards.
  double log_w = 0.0;
  for (int j = T - 1; j >= 0; --j) {
    w[j] = std::exp(log_w);
    log_w += std::log1p(-2.0 / (gamma + j));
  }
  return w;
}

BoundTerms convergence_bound(int T, const BoundConstants& k, const J2Schedule& j2,
                             std::span<const double> p) {
  k.validate();
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!j2) throw std::invalid_argument("missing J^2 schedule");
  for (double x : p) {
    if (!finite_nonneg(x)) throw std::invalid_argument("weights must be finite and >= 0");
  }

  BoundTerms out;
  const double U = compute_U(k);
  out.first_term = 0.5 * k.L / (k.gamma + T) * (4.0 * U / (k.mu * k.mu) + k.gamma * k.Delta0);

  const auto weights = discount_weights(T, k.gamma);
  double gap = 0.0;
  for (int j = 0; j < T; ++j) {
    double round_error = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
      const double v = j2(j, n);
      if (!finite_nonneg(v)) throw std::invalid_argument("J^2 values must be finite and >= 0");
      round_error += p[n] * v;
    }
    gap += round_error * weights[j];
  }
  out.gap_term = 0.5 * k.L * gap;
  out.total = out.first_term + out.gap_term;
  return out;
}

}  // namespace wqfl::bound
