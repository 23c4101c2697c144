#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace wqfl::detail {

/// Root of a continuous function known to change sign on [lo, hi].
/// Returns the midpoint of the final bracket.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double f_lo, double f_hi,
                      int bits = 50, std::uintmax_t max_iter = 200) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  boost::math::tools::eps_tolerance<double> tol(bits);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  return 0.5 * (a + b);
}

template <class F>
double bracketed_root(F&& f, double lo, double hi, int bits = 50,
                      std::uintmax_t max_iter = 200) {
  return bracketed_root(f, lo, hi, f(lo), f(hi), bits, max_iter);
}

/// Minimizer of a unimodal function on [lo, hi] by golden-section search,
/// stopped once the bracket is narrower than rel_tol * |x|. Values of +inf
/// are allowed and treated as larger than any finite value.
template <class F>
double golden_section(F&& f, double lo, double hi, double rel_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > rel_tol * std::max(std::abs(lo), std::abs(hi))) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

}  // namespace wqfl::detail
