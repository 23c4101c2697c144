#pragma once

#include <vector>

#include "wqfl/roundopt.hpp"

namespace wqfl::oracle {

// Brute-force reference solutions for small rounds (up to three users).
// They only use the channel primitives and never the round optimizer, so
// they can be used to check it.

struct OracleOptions {
  int lc_points = 500;    // log-spaced l_c samples above the lower bound
  double lc_span = 100.0; // samples cover [lo, lc_span * lo]
  int bit_points = 200;   // samples per free bit variable (continuous search)
  int refine_iters = 60;  // golden refinement steps around the best sample
};

struct OracleResult {
  double latency = 0.0;
  double l_c = 0.0;
  std::vector<double> bits;
  bool feasible = false;
};

/// Grid search over l_c and real bits on the surface where the error
/// tolerance is met with equality (bits >= 1 clamped).
OracleResult continuous(const roundopt::RoundInputs& in, const OracleOptions& opt = {});

/// Exhaustive search over integer bits in [1, b_cap] (the last user takes
/// the fewest bits meeting the tolerance) with a 1-D search on l_c each.
OracleResult integer(const roundopt::RoundInputs& in, const OracleOptions& opt = {});

}  // namespace wqfl::oracle
