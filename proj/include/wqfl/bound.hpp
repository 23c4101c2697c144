#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wqfl::bound {

/// Problem constants of the convergence bound. None are estimated here.
struct BoundConstants {
  double L = 1.0;             // smoothness
  double mu = 1.0;            // strong convexity
  double G2 = 0.0;            // bound on the squared stochastic gradient norm
  std::vector<double> sigma2; // per-user gradient variance
  double Gamma = 0.0;         // non-IID degree
  int tau = 1;                // local steps
  double gamma = 3.0;         // learning-rate offset, eta(t) = 2 / (mu (gamma + t))
  double Delta0 = 0.0;        // E||w(0) - w*||^2

  /// Throws std::invalid_argument unless L >= mu > 0, tau >= 1,
  /// gamma > max(2, 2/mu, L/mu) and everything else is finite and >= 0.
  void validate() const;
};

/// tau^2 sum sigma_n^2 + tau G^2 + 2 L tau^2 Gamma
///   + (mu + 2) tau (tau - 1) (2 tau - 1) / 6 G^2.
double compute_U(const BoundConstants& k);

/// J_n^2(j): weighted quantization error bound of user n in round j.
using J2Schedule = std::function<double(int round, std::size_t user)>;

struct BoundTerms {
  double first_term = 0.0;  // decays like 1 / (gamma + T)
  double gap_term = 0.0;    // contribution of quantization error
  double total = 0.0;
};

/// Weight prod_{i=j+1}^{T-1} (1 - 2 / (gamma + i)) of round j at horizon T,
/// accumulated in log space.
double discount_weight(int j, int T, double gamma);

/// discount_weight(j, T, gamma) for j = 0 .. T-1.
std::vector<double> discount_weights(int T, double gamma);

/// Upper bound on E[F(w(T))] - F(w*) after T rounds.
BoundTerms convergence_bound(int T, const BoundConstants& k, const J2Schedule& j2,
                             std::span<const double> p);

}  // namespace wqfl::bound
