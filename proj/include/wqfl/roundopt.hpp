#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wqfl/channel.hpp"

namespace wqfl::roundopt {

struct SolverOptions {
  double b_cap = 40.0;        // hard upper limit on quantization bits
  double lc_rel_tol = 1e-9;   // golden-section bracket on l_c
  double c3_rel_tol = 1e-10;  // relative residual of the error-tolerance constraint
  bool integer_search = true; // local search over single-bit moves after rounding up
};

/// Everything the per-round optimizer needs to know about one round.
struct RoundInputs {
  std::vector<channel::UserProfile> users;
  std::vector<double> gains;  // g_n
  std::vector<double> delta;  // quantization range scale delta_n >= 0
  double epsilon = 0.01;      // error tolerance
  std::int64_t model_dim = 23860;
  channel::PhysicsConfig physics;
  SolverOptions options;

  std::size_t size() const { return users.size(); }
  void validate() const;
};

enum class Status {
  ok,
  infeasible,          // some payload cannot be delivered with the energy budget
  epsilon_unreachable  // the tolerance needs more bits than the configured cap
};

const char* to_string(Status s);

/// Output of an allocator. `bits` holds real values before rounding.
struct RoundAllocation {
  double l_c = 0.0;
  std::vector<double> freq;    // Hz
  std::vector<double> energy;  // transmit energy, J
  std::vector<double> slot;    // uplink slot, s
  std::vector<double> bits;    // quantization bits per user
  double latency = 0.0;        // l_c + sum(slot)
  Status status = Status::ok;
  bool b_cap_hit = false;
  std::string message;

  bool feasible() const { return status == Status::ok; }
};

/// Lagrange multipliers recovered at a continuous optimum.
struct Multipliers {
  std::vector<double> lambda1;  // uplink constraint, s/bit
  std::vector<double> lambda2;  // energy budget, s/J
  double lambda3 = 0.0;         // error tolerance
  double lambda4 = 0.0;         // l_c >= a1
  std::vector<double> lambda5;  // bits >= 1
};

struct ContinuousSolution {
  RoundAllocation alloc;
  Multipliers mult;
};

/// Relative violations of the optimality identities.
struct KktReport {
  double compute_time = 0.0;   // closed form for l_c
  double energy = 0.0;         // energy identity from dL/dE = 0
  double slot = 0.0;           // Lambert-W closed form for the slot
  double bits_uplink = 0.0;    // bits from the uplink constraint at equality
  double bits_stationarity = 0.0;
  double nonnegativity = 0.0;
  double slackness = 0.0;      // complementary slackness of l_c >= a1 and B >= 1

  double max() const;
};

/// Signed relative slack of every constraint (negative means violated).
struct ConstraintReport {
  double uplink = 0.0;     // min_n (delivered - payload) / payload
  double energy = 0.0;     // min_n (E_max - used) / E_max
  double tolerance = 0.0;  // (eps - sum p delta^2 / (2^B-1)^2) / eps
  double frequency = 0.0;  // min_n (f_max - f) / f_max
  double min_bits = 0.0;   // min_n B - 1

  bool satisfied(double tol = 1e-9) const;
};

/// Shortest admissible common computation time: max_n tau c_n D_n / f_max_n.
double min_compute_time(std::span<const channel::UserProfile> users,
                        const channel::PhysicsConfig& cfg);

/// CPU frequencies that make every user finish computing exactly at l_c.
/// Throws std::invalid_argument when l_c is below min_compute_time.
std::vector<double> cpu_frequencies(double l_c, std::span<const channel::UserProfile> users,
                                    const channel::PhysicsConfig& cfg);

/// Weighted quantization error sum_n p_n delta_n^2 / (2^B_n - 1)^2.
double tolerance_usage(std::span<const double> bits, const RoundInputs& in);

/// Minimizes l_c + sum_n l_up_n over the relaxed problem with real bits.
ContinuousSolution solve_round_continuous(const RoundInputs& in);

/// Rounds the bits up and re-optimizes l_c, E and the slots for them. With
/// `options.integer_search`, single-bit decrements and moves of one bit
/// between users that keep the tolerance met are then applied while they
/// shorten the round.
RoundAllocation round_and_resolve(const RoundAllocation& continuous, const RoundInputs& in);

/// Continuous solve followed by rounding; the proposed allocator.
RoundAllocation solve_round(const RoundInputs& in);

/// Best l_c, E and slots for given integer bits (the re-solve stage).
RoundAllocation allocate_fixed_bits(std::span<const double> bits, const RoundInputs& in);

KktReport kkt_residuals(const RoundAllocation& alloc, const Multipliers& mult,
                        const RoundInputs& in);

ConstraintReport check_constraints(const RoundAllocation& alloc, const RoundInputs& in);

/// Same bit count for everybody, remaining variables optimized.
RoundAllocation baseline_fixed_bits(const RoundInputs& in, int bits = 16);

/// Every user gets the same slot: the longest one needed at the proposed
/// bits, with l_c re-optimized for that rule.
RoundAllocation baseline_equal_slots(const RoundInputs& in);
RoundAllocation baseline_equal_slots(const RoundInputs& in, const RoundAllocation& proposed);

/// Half of each energy budget for computing, half for transmitting.
RoundAllocation baseline_equal_energy(const RoundInputs& in);

}  // namespace wqfl::roundopt
