#include "wqfl/roundopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "detail/roots.hpp"
#include "wqfl/lambert_w.hpp"
#include "wqfl/quant.hpp"

namespace wqfl::roundopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 2 ln2 2^B / (2^B - 1)^3, minus the derivative of 1/(2^B-1)^2.
double gradient_weight(double bits) {
  const double q = std::exp2(bits) - 1.0;
  return 2.0 * M_LN2 * (q + 1.0) / (q * q * q);
}

double error_factor(double bits) {
  const double q = std::exp2(bits) - 1.0;
  return 1.0 / (q * q);
}

// Round-wide constants.
struct Problem {
  explicit Problem(const RoundInputs& inputs) : in(inputs) {
    in.validate();
    const auto& cfg = in.physics;
    a1 = min_compute_time(in.users, cfg);
    d = static_cast<double>(in.model_dim);
    m = static_cast<double>(cfg.header_bits);
    const double tau3 = std::pow(static_cast<double>(cfg.tau), 3);
    for (std::size_t n = 0; n < in.size(); ++n) {
      const auto& u = in.users[n];
      const double cd = u.cycles_per_bit * u.workload_bits;
      coef.push_back(cfg.zeta * tau3 * cd * cd * cd);
      weight.push_back(u.weight * in.delta[n] * in.delta[n]);
    }
  }

  std::size_t size() const { return in.size(); }
  double payload(double bits) const { return d * (bits + 1.0) + m; }
  double bits_for_payload(double payload) const { return (payload - m) / d - 1.0; }
  double energy_at(std::size_t n, double l_c) const {
    return in.users[n].e_max - coef[n] / (l_c * l_c);
  }
  // Smallest l_c leaving transmit energy `need` to user n.
  double lc_for_energy(std::size_t n, double need) const {
    const double spare = in.users[n].e_max - need;
    if (!(spare > 0.0)) return kInf;
    return std::sqrt(coef[n] / spare);
  }
  // Energy at which the capacity cap equals `payload`.
  double energy_for_cap(std::size_t n, double payload) const {
    return payload * in.physics.noise_psd * M_LN2 / in.gains[n];
  }

  const RoundInputs& in;
  double a1 = 0.0;
  double d = 0.0;
  double m = 0.0;
  std::vector<double> coef;    // compute energy = coef / l_c^2
  std::vector<double> weight;  // p_n delta_n^2
};

// Per-user bit choice for a fixed transmit energy.
struct UserState {
  UserState(const Problem& p, std::size_t n, double energy)
      : curve(energy, p.in.gains[n], p.in.physics), weight(p.weight[n]) {}

  channel::UplinkCurve curve;
  double weight;
  double u_one = 0.0;   // log load at B = 1
  double u_cap = -kInf; // log load at B = b_cap, -inf if beyond capacity
  double b_max = 1.0;   // supremum of reachable bits
};

struct Choice {
  double bits = 1.0;
  double load = 0.0;
};

struct BitsSolution {
  Status status = Status::ok;
  double lambda3 = 0.0;
  std::vector<Choice> choice;
  double slot_sum = 0.0;
  bool b_cap_hit = false;
};

// Minimizes T(B) + lambda3 w / (2^B-1)^2 over B in [1, b_max) for one user.
// Works in u = ln x, where x is the normalized uplink load; both the slot
// and the bits are explicit in x.
Choice choose_bits(const Problem& p, const UserState& s, double lambda3) {
  const double x_one = std::exp(s.u_one);
  if (s.weight <= 0.0 || lambda3 <= 0.0) return {1.0, x_one};
  auto stationarity = [&](double u) {
    const double x = std::exp(u);
    const double bits = p.bits_for_payload(s.curve.bits(x));
    return p.d * s.curve.time_per_bit(x) - lambda3 * s.weight * gradient_weight(bits);
  };
  const double f_one = stationarity(s.u_one);
  if (f_one >= 0.0) return {1.0, x_one};

  double lo;
  double f_lo;
  if (std::isfinite(s.u_cap)) {
    lo = s.u_cap;
    f_lo = stationarity(lo);
    if (f_lo <= 0.0) return {p.in.options.b_cap, std::exp(lo)};
  } else {
    // Marginal time per bit diverges at the capacity cap (x -> 0).
    constexpr double kMinLogLoad = -340.0;
    double step = 1.0;
    lo = s.u_one - step;
    while ((f_lo = stationarity(lo)) <= 0.0 && lo > kMinLogLoad) {
      step *= 2.0;
      lo = std::max(s.u_one - step, kMinLogLoad);
    }
    if (f_lo <= 0.0) return {s.b_max, std::exp(lo)};
  }
  const double u = detail::bracketed_root(stationarity, lo, s.u_one, f_lo, f_one);
  const double x = std::exp(u);
  return {std::max(1.0, p.bits_for_payload(s.curve.bits(x))), x};
}

// Optimal real bits for fixed transmit energies: per-user minimization
// coupled through a scalar multiplier on the error tolerance.
BitsSolution solve_bits(const Problem& p, std::span<const double> energy) {
  BitsSolution out;
  const std::size_t n_users = p.size();
  const double b_cap = p.in.options.b_cap;
  const double eps = p.in.epsilon;

  std::vector<UserState> users;
  users.reserve(n_users);
  for (std::size_t n = 0; n < n_users; ++n) {
    if (!(energy[n] > 0.0)) {
      out.status = Status::infeasible;
      return out;
    }
    UserState s(p, n, energy[n]);
    auto x_one = s.curve.load_for_bits(p.payload(1.0));
    if (!x_one) {
      out.status = Status::infeasible;
      return out;
    }
    s.u_one = std::log(*x_one);
    if (auto x_cap = s.curve.load_for_bits(p.payload(b_cap))) {
      s.u_cap = std::log(*x_cap);
      s.b_max = b_cap;
    } else {
      s.b_max = std::min(b_cap, p.bits_for_payload(s.curve.cap()));
    }
    users.push_back(std::move(s));
  }

  auto usage_at = [&](double lambda3) {
    out.choice.clear();
    double usage = 0.0;
    for (const auto& s : users) {
      out.choice.push_back(choose_bits(p, s, lambda3));
      usage += s.weight * error_factor(out.choice.back().bits);
    }
    return usage;
  };

  double usage_floor = 0.0;
  bool cap_binds = false;
  for (const auto& s : users) {
    usage_floor += s.weight * error_factor(s.b_max);
    cap_binds = cap_binds || std::isfinite(s.u_cap);
  }

  if (usage_at(0.0) > eps) {
    if (usage_floor >= eps) {
      out.status = cap_binds ? Status::epsilon_unreachable : Status::infeasible;
      return out;
    }
    // usage(lambda3) is non-increasing; search in v = ln lambda3.
    auto excess = [&](double v) { return usage_at(std::exp(v)) - eps; };
    double hi = 0.0;
    double f_hi = excess(hi);
    while (f_hi > 0.0) {
      hi += 4.0;
      f_hi = excess(hi);
    }
    double lo = hi - 4.0;
    double f_lo = excess(lo);
    while (f_lo <= 0.0) {
      lo -= 4.0;
      f_lo = excess(lo);
    }
    const double v = detail::bracketed_root(excess, lo, hi, f_lo, f_hi, 52);
    out.lambda3 = std::exp(v);
    usage_at(out.lambda3);
  }

  for (std::size_t n = 0; n < n_users; ++n) {
    out.slot_sum += users[n].curve.slot(out.choice[n].load);
    out.b_cap_hit = out.b_cap_hit || out.choice[n].bits >= b_cap;
  }
  return out;
}

// lambda2 = lambda1 * dS/dE at the current load.
double energy_multiplier(const channel::UplinkCurve& curve, double load,
                         const channel::PhysicsConfig& cfg) {
  return curve.time_per_bit(load) * curve.gain() / (cfg.noise_psd * M_LN2 * (1.0 + load));
}

// Derivative of l_c + sum slot(l_c) with bits held at their optimum
// (envelope theorem): 1 - sum_n lambda2_n * 2 coef_n / l_c^3.
double lc_derivative(const Problem& p, double l_c, std::span<const double> lambda2) {
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += lambda2[n] * 2.0 * p.coef[n];
  return 1.0 - s / (l_c * l_c * l_c);
}

// Upper end of the l_c bracket: start at 100x the lower end, double until
// the objective is no longer decreasing.
template <class Phi>
double upper_bracket(Phi&& phi, double lo) {
  double hi = 100.0 * lo;
  for (int i = 0; i < 200; ++i) {
    const double f_hi = phi(hi);
    if (std::isfinite(f_hi) && phi(0.5 * (lo + hi)) <= f_hi) break;
    hi *= 2.0;
  }
  return hi;
}

// Golden-section search on l_c in [lo, hi], snapped to lo when the
// derivative there is non-negative and polished on the derivative root.
template <class Phi, class DPhi>
double minimize_lc(Phi&& phi, DPhi&& dphi, double lo, double rel_tol) {
  const double hi = upper_bracket(phi, lo);
  if (std::isfinite(phi(lo)) && dphi(lo) >= 0.0) return lo;
  double l = detail::golden_section(phi, lo, hi, rel_tol);
  const double width = 64.0 * rel_tol * l;
  const double a = std::max(lo, l - width);
  const double b = std::min(hi, l + width);
  const double da = dphi(a);
  const double db = dphi(b);
  if (std::isfinite(da) && std::isfinite(db) && da < 0.0 && db > 0.0) {
    l = detail::bracketed_root(dphi, a, b, da, db);
  }
  return l;
}

std::vector<double> tight_energies(const Problem& p, double l_c) {
  std::vector<double> e(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) e[n] = p.energy_at(n, l_c);
  return e;
}

RoundAllocation failed(Status status, std::string message) {
  RoundAllocation a;
  a.status = status;
  a.latency = kInf;
  a.message = std::move(message);
  return a;
}

// Slots for fixed payloads and energies; nullopt if any is undeliverable.
std::optional<std::vector<double>> slots_for(const Problem& p, std::span<const double> payload,
                                             std::span<const double> energy) {
  std::vector<double> slots(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (!(energy[n] > 0.0)) return std::nullopt;
    auto l = channel::min_uplink_time(payload[n], energy[n], p.in.gains[n], p.in.physics);
    if (!l) return std::nullopt;
    slots[n] = *l;
  }
  return slots;
}

// Lowest l_c at which every payload fits under the capacity cap.
double lc_floor_for_payloads(const Problem& p, std::span<const double> payload) {
  double lo = p.a1;
  for (std::size_t n = 0; n < p.size(); ++n) {
    lo = std::max(lo, p.lc_for_energy(n, p.energy_for_cap(n, payload[n])));
  }
  return lo;
}

std::vector<double> integer_bits(std::span<const double> bits) {
  std::vector<double> out(bits.size());
  // Values within 1e-9 of an integer are taken as that integer.
  for (std::size_t n = 0; n < bits.size(); ++n) out[n] = std::max(1.0, std::ceil(bits[n] - 1e-9));
  return out;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::ok:
      return "ok";
    case Status::infeasible:
      return "infeasible";
    case Status::epsilon_unreachable:
      return "epsilon_unreachable";
  }
  return "unknown";
}

void RoundInputs::validate() const {
  const std::size_t n = users.size();
  if (n == 0) throw std::invalid_argument("round needs at least one user");
  if (gains.size() != n || delta.size() != n) {
    throw std::invalid_argument("gains and delta must have one entry per user");
  }
  for (const auto& u : users) u.validate();
  for (double g : gains) {
    if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("channel gains must be positive");
  }
  for (double x : delta) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("delta must be finite and >= 0");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (model_dim < 1) throw std::invalid_argument("model dimension must be >= 1");
  if (!(options.b_cap >= 1.0)) throw std::invalid_argument("bit cap must be >= 1");
  physics.validate();
}

double KktReport::max() const {
  return std::max({compute_time, energy, slot, bits_uplink, bits_stationarity, nonnegativity,
                   slackness});
}

bool ConstraintReport::satisfied(double tol) const {
  return uplink >= -tol && energy >= -tol && tolerance >= -tol && frequency >= -tol &&
         min_bits >= -tol;
}

double min_compute_time(std::span<const channel::UserProfile> users,
                        const channel::PhysicsConfig& cfg) {
  double a1 = 0.0;
  for (const auto& u : users) a1 = std::max(a1, channel::compute_time(u, u.f_max, cfg));
  return a1;
}

std::vector<double> cpu_frequencies(double l_c, std::span<const channel::UserProfile> users,
                                    const channel::PhysicsConfig& cfg) {
  const double a1 = min_compute_time(users, cfg);
  if (!(l_c >= a1 * (1.0 - 1e-12))) {
    throw std::invalid_argument("computation time below the fastest admissible value");
  }
  std::vector<double> f;
  f.reserve(users.size());
  for (const auto& u : users) {
    const double freq = cfg.tau * u.cycles_per_bit * u.workload_bits / l_c;
    f.push_back(std::min(freq, u.f_max));
  }
  return f;
}

double tolerance_usage(std::span<const double> bits, const RoundInputs& in) {
  double s = 0.0;
  for (std::size_t n = 0; n < bits.size(); ++n) {
    if (in.delta[n] > 0.0) s += in.users[n].weight * quant::error_term(in.delta[n], bits[n]);
  }
  return s;
}

ContinuousSolution solve_round_continuous(const RoundInputs& in) {
  Problem p(in);
  const std::size_t n_users = p.size();

  // Feasibility in the l_c -> infinity limit, where all energy goes to the uplink.
  std::vector<double> full(n_users);
  for (std::size_t n = 0; n < n_users; ++n) full[n] = in.users[n].e_max;
  if (auto limit = solve_bits(p, full); limit.status != Status::ok) {
    return {failed(limit.status, limit.status == Status::epsilon_unreachable
                                     ? "error tolerance needs more bits than the cap allows"
                                     : "payload exceeds capacity at the full energy budget"),
            {}};
  }

  double lo = p.a1;
  for (std::size_t n = 0; n < n_users; ++n) {
    lo = std::max(lo, p.lc_for_energy(n, p.energy_for_cap(n, p.payload(1.0))) * (1.0 + 1e-12));
  }

  auto evaluate = [&](double l_c) {
    auto e = tight_energies(p, l_c);
    return solve_bits(p, e);
  };
  auto phi = [&](double l_c) {
    auto s = evaluate(l_c);
    return s.status == Status::ok ? l_c + s.slot_sum : kInf;
  };
  auto dphi = [&](double l_c) {
    auto e = tight_energies(p, l_c);
    auto s = solve_bits(p, e);
    if (s.status != Status::ok) return -kInf;
    std::vector<double> lambda2(n_users);
    for (std::size_t n = 0; n < n_users; ++n) {
      channel::UplinkCurve curve(e[n], in.gains[n], in.physics);
      lambda2[n] = energy_multiplier(curve, s.choice[n].load, in.physics);
    }
    return lc_derivative(p, l_c, lambda2);
  };

  const double l_c = minimize_lc(phi, dphi, lo, in.options.lc_rel_tol);
  const auto energy = tight_energies(p, l_c);
  const auto bits = solve_bits(p, energy);
  if (bits.status != Status::ok) return {failed(bits.status, "no feasible computation time"), {}};

  ContinuousSolution sol;
  auto& a = sol.alloc;
  auto& mu = sol.mult;
  a.l_c = l_c;
  a.freq = cpu_frequencies(l_c, in.users, in.physics);
  a.energy = energy;
  a.b_cap_hit = bits.b_cap_hit;
  mu.lambda3 = bits.lambda3;
  for (std::size_t n = 0; n < n_users; ++n) {
    channel::UplinkCurve curve(energy[n], in.gains[n], in.physics);
    const auto& c = bits.choice[n];
    a.slot.push_back(curve.slot(c.load));
    a.bits.push_back(c.bits);
    const double lambda1 = curve.time_per_bit(c.load);
    mu.lambda1.push_back(lambda1);
    mu.lambda2.push_back(energy_multiplier(curve, c.load, in.physics));
    double lambda5 = 0.0;
    if (c.bits <= 1.0) lambda5 = p.d * lambda1 - bits.lambda3 * p.weight[n] * gradient_weight(1.0);
    mu.lambda5.push_back(lambda5);
  }
  if (l_c <= p.a1) mu.lambda4 = lc_derivative(p, l_c, mu.lambda2);
  a.latency = l_c + std::accumulate(a.slot.begin(), a.slot.end(), 0.0);
  return sol;
}

RoundAllocation allocate_fixed_bits(std::span<const double> bits, const RoundInputs& in) {
  Problem p(in);
  const std::size_t n_users = p.size();
  if (bits.size() != n_users) throw std::invalid_argument("one bit count per user required");

  std::vector<double> payload(n_users);
  for (std::size_t n = 0; n < n_users; ++n) {
    if (!(bits[n] >= 1.0)) throw std::invalid_argument("bits must be >= 1");
    payload[n] = p.payload(bits[n]);
    if (payload[n] >= channel::capacity_cap(in.users[n].e_max, in.gains[n], in.physics)) {
      return failed(Status::infeasible, "payload of user " + std::to_string(n) +
                                            " exceeds capacity at the full energy budget");
    }
  }

  const double lo = lc_floor_for_payloads(p, payload) * (1.0 + 1e-12);
  auto phi = [&](double l_c) {
    auto slots = slots_for(p, payload, tight_energies(p, l_c));
    return slots ? l_c + std::accumulate(slots->begin(), slots->end(), 0.0) : kInf;
  };
  auto dphi = [&](double l_c) {
    const auto e = tight_energies(p, l_c);
    std::vector<double> lambda2(n_users);
    for (std::size_t n = 0; n < n_users; ++n) {
      if (!(e[n] > 0.0)) return -kInf;
      channel::UplinkCurve curve(e[n], in.gains[n], in.physics);
      auto x = curve.load_for_bits(payload[n]);
      if (!x) return -kInf;
      lambda2[n] = energy_multiplier(curve, *x, in.physics);
    }
    return lc_derivative(p, l_c, lambda2);
  };

  RoundAllocation a;
  a.l_c = minimize_lc(phi, dphi, lo, in.options.lc_rel_tol);
  a.energy = tight_energies(p, a.l_c);
  auto slots = slots_for(p, payload, a.energy);
  if (!slots) return failed(Status::infeasible, "no feasible computation time for the given bits");
  a.slot = std::move(*slots);
  a.freq = cpu_frequencies(a.l_c, in.users, in.physics);
  a.bits.assign(bits.begin(), bits.end());
  a.b_cap_hit = std::any_of(bits.begin(), bits.end(),
                            [&](double b) { return b >= in.options.b_cap; });
  a.latency = a.l_c + std::accumulate(a.slot.begin(), a.slot.end(), 0.0);
  return a;
}

RoundAllocation round_and_resolve(const RoundAllocation& continuous, const RoundInputs& in) {
  if (!continuous.feasible()) return continuous;
  RoundAllocation best = allocate_fixed_bits(integer_bits(continuous.bits), in);
  if (!best.feasible() || !in.options.integer_search) return best;

  Problem p(in);
  const std::size_t n_users = p.size();
  auto slot_at = [&](std::size_t n, double bits) {
    if (bits < 1.0 || bits > in.options.b_cap) return kInf;
    auto l = channel::min_uplink_time(p.payload(bits), best.energy[n], in.gains[n], in.physics);
    return l ? *l : kInf;
  };
  // Each accepted move shortens the round at the current l_c already, and
  // the re-solve of l_c can only shorten it further.
  for (int iter = 0; iter < 256; ++iter) {
    const double usage = tolerance_usage(best.bits, in);
    std::vector<double> down(n_users), up(n_users), save(n_users), cost(n_users);
    for (std::size_t n = 0; n < n_users; ++n) {
      const double b = best.bits[n];
      down[n] = slot_at(n, b - 1.0) - best.slot[n];
      up[n] = slot_at(n, b + 1.0) - best.slot[n];
      save[n] = b > 1.0 ? p.weight[n] * (error_factor(b - 1.0) - error_factor(b)) : kInf;
      cost[n] = p.weight[n] * (error_factor(b) - error_factor(b + 1.0));
    }
    double gain = -1e-12 * best.latency;
    std::vector<double> next;
    for (std::size_t i = 0; i < n_users; ++i) {
      if (!std::isfinite(down[i])) continue;
      if (usage + save[i] <= in.epsilon && down[i] < gain) {
        gain = down[i];
        next = best.bits;
        next[i] -= 1.0;
      }
      for (std::size_t j = 0; j < n_users; ++j) {
        if (j == i || !std::isfinite(up[j])) continue;
        if (usage + save[i] - cost[j] <= in.epsilon && down[i] + up[j] < gain) {
          gain = down[i] + up[j];
          next = best.bits;
          next[i] -= 1.0;
          next[j] += 1.0;
        }
      }
    }
    if (next.empty()) break;
    auto trial = allocate_fixed_bits(next, in);
    if (!trial.feasible() || !(trial.latency < best.latency)) break;
    best = std::move(trial);
  }
  return best;
}

RoundAllocation solve_round(const RoundInputs& in) {
  return round_and_resolve(solve_round_continuous(in).alloc, in);
}

KktReport kkt_residuals(const RoundAllocation& alloc, const Multipliers& mult,
                        const RoundInputs& in) {
  Problem p(in);
  const auto& cfg = in.physics;
  const double w = cfg.bandwidth_hz;
  KktReport r;
  auto rel = [](double value, double ref) {
    return std::abs(value - ref) / std::max(std::abs(ref), std::numeric_limits<double>::min());
  };

  double weighted = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) weighted += mult.lambda2[n] * 2.0 * p.coef[n];
  const double denom = 1.0 - mult.lambda4;
  r.compute_time = denom > 0.0 ? rel(alloc.l_c, std::cbrt(weighted / denom)) : kInf;

  r.nonnegativity = std::max({0.0, -mult.lambda3, -mult.lambda4});
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double g = in.gains[n];
    const double e = alloc.energy[n];
    const double l = alloc.slot[n];
    const double b = alloc.bits[n];
    const double l1 = mult.lambda1[n];
    const double l2 = mult.lambda2[n];
    const double l5 = mult.lambda5[n];

    const double e_closed = l * w * (l1 / (l2 * M_LN2) - cfg.noise_psd / g);
    r.energy = std::max(r.energy, rel(e, e_closed));

    const double psi = -std::exp(-1.0 - M_LN2 / (w * l1));
    const double w0 = lambert_w0(psi);
    const double l_closed = -g * e / (w * cfg.noise_psd * (1.0 + 1.0 / w0));
    r.slot = std::max(r.slot, rel(l, l_closed));

    const double b_closed =
        l * w / p.d * std::log2(1.0 + g * e / (l * w * cfg.noise_psd)) - p.m / p.d - 1.0;
    r.bits_uplink = std::max(r.bits_uplink, rel(b, b_closed));

    if (p.weight[n] > 0.0 && b < in.options.b_cap) {
      const double q = std::exp2(b) - 1.0;
      const double rhs =
          2.0 * mult.lambda3 * M_LN2 * p.weight[n] * std::exp2(b) / (p.d * l1 - l5);
      r.bits_stationarity = std::max(r.bits_stationarity, rel(q * q * q, rhs));
    }

    const double scale5 = p.d * l1;
    r.nonnegativity = std::max({r.nonnegativity, -l1 / std::abs(l1), -l2 / std::abs(l2),
                                -l5 / scale5});
    r.slackness = std::max(r.slackness, std::abs(l5 / scale5 * (b - 1.0)));
  }
  r.slackness = std::max(r.slackness, std::abs(mult.lambda4 * (alloc.l_c - p.a1) / alloc.l_c));
  return r;
}

ConstraintReport check_constraints(const RoundAllocation& alloc, const RoundInputs& in) {
  Problem p(in);
  ConstraintReport r;
  r.uplink = r.energy = r.frequency = r.min_bits = kInf;
  for (std::size_t n = 0; n < p.size(); ++n) {
    const auto& u = in.users[n];
    const double payload = p.payload(alloc.bits[n]);
    const double sent = channel::uplink_bits(alloc.slot[n], alloc.energy[n], in.gains[n], in.physics);
    r.uplink = std::min(r.uplink, (sent - payload) / payload);
    const double used = channel::compute_energy(u, alloc.freq[n], in.physics) + alloc.energy[n];
    r.energy = std::min(r.energy, (u.e_max - used) / u.e_max);
    r.frequency = std::min(r.frequency, (u.f_max - alloc.freq[n]) / u.f_max);
    r.min_bits = std::min(r.min_bits, alloc.bits[n] - 1.0);
  }
  r.tolerance = (in.epsilon - tolerance_usage(alloc.bits, in)) / in.epsilon;
  return r;
}

RoundAllocation baseline_fixed_bits(const RoundInputs& in, int bits) {
  std::vector<double> b(in.size(), static_cast<double>(bits));
  return allocate_fixed_bits(b, in);
}

RoundAllocation baseline_equal_slots(const RoundInputs& in) {
  return baseline_equal_slots(in, solve_round(in));
}

RoundAllocation baseline_equal_slots(const RoundInputs& in, const RoundAllocation& proposed) {
  if (!proposed.feasible()) return proposed;
  Problem p(in);
  const std::size_t n_users = p.size();
  std::vector<double> payload(n_users);
  for (std::size_t n = 0; n < n_users; ++n) payload[n] = p.payload(proposed.bits[n]);

  auto common_slot = [&](double l_c) {
    auto slots = slots_for(p, payload, tight_energies(p, l_c));
    return slots ? *std::max_element(slots->begin(), slots->end()) : kInf;
  };
  auto phi = [&](double l_c) { return l_c + static_cast<double>(n_users) * common_slot(l_c); };

  const double lo = lc_floor_for_payloads(p, payload) * (1.0 + 1e-12);
  const double hi = upper_bracket(phi, lo);
  const double l_c = detail::golden_section(phi, lo, hi, in.options.lc_rel_tol);

  RoundAllocation a;
  a.l_c = l_c;
  a.energy = tight_energies(p, l_c);
  a.slot.assign(n_users, common_slot(l_c));
  a.freq = cpu_frequencies(l_c, in.users, in.physics);
  a.bits = proposed.bits;
  a.b_cap_hit = proposed.b_cap_hit;
  a.latency = l_c + static_cast<double>(n_users) * a.slot.front();
  if (!std::isfinite(a.latency)) return failed(Status::infeasible, "no common slot found");
  return a;
}

RoundAllocation baseline_equal_energy(const RoundInputs& in) {
  Problem p(in);
  const std::size_t n_users = p.size();
  std::vector<double> energy(n_users);
  double l_c = p.a1;
  for (std::size_t n = 0; n < n_users; ++n) {
    energy[n] = 0.5 * in.users[n].e_max;
    l_c = std::max(l_c, p.lc_for_energy(n, energy[n]));
  }
  auto bits = solve_bits(p, energy);
  if (bits.status != Status::ok) {
    return failed(bits.status, "half the energy budget cannot meet the tolerance");
  }
  std::vector<double> real_bits(n_users);
  for (std::size_t n = 0; n < n_users; ++n) real_bits[n] = bits.choice[n].bits;

  RoundAllocation a;
  a.l_c = l_c;
  a.bits = integer_bits(real_bits);
  std::vector<double> payload(n_users);
  for (std::size_t n = 0; n < n_users; ++n) payload[n] = p.payload(a.bits[n]);
  auto slots = slots_for(p, payload, energy);
  if (!slots) return failed(Status::infeasible, "rounded payload exceeds capacity at half energy");
  a.slot = std::move(*slots);
  a.energy = std::move(energy);
  a.freq = cpu_frequencies(l_c, in.users, in.physics);
  a.b_cap_hit = bits.b_cap_hit;
  a.latency = l_c + std::accumulate(a.slot.begin(), a.slot.end(), 0.0);
  return a;
}

}  // namespace wqfl::roundopt
