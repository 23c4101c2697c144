#include "wqfl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wqfl::oracle {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Setup {
  explicit Setup(const roundopt::RoundInputs& inputs) : in(inputs) {
    in.validate();
    if (in.size() > 3) throw std::invalid_argument("grid oracle supports at most three users");
    const auto& cfg = in.physics;
    d = static_cast<double>(in.model_dim);
    m = static_cast<double>(cfg.header_bits);
    for (std::size_t n = 0; n < in.size(); ++n) {
      const auto& u = in.users[n];
      a1 = std::max(a1, cfg.tau * u.cycles_per_bit * u.workload_bits / u.f_max);
      const double cd = cfg.tau * u.cycles_per_bit * u.workload_bits;
      coef.push_back(cfg.zeta * cd * cd * cd);
      weight.push_back(u.weight * in.delta[n] * in.delta[n]);
      if (weight.back() > 0.0) free.push_back(n);
    }
  }

  double energy(std::size_t n, double l_c) const { return in.users[n].e_max - coef[n] / (l_c * l_c); }

  double slot(std::size_t n, double bits, double e) const {
    if (!(e > 0.0)) return kInf;
    auto l = channel::min_uplink_time(d * (bits + 1.0) + m, e, in.gains[n], in.physics);
    return l ? *l : kInf;
  }

  // Smallest l_c at which every user can send `bits` at all.
  double lc_floor(const std::vector<double>& bits) const {
    double lo = a1;
    for (std::size_t n = 0; n < in.size(); ++n) {
      const double need = (d * (bits[n] + 1.0) + m) * in.physics.noise_psd * M_LN2 / in.gains[n];
      const double spare = in.users[n].e_max - need;
      if (!(spare > 0.0)) return kInf;
      lo = std::max(lo, std::sqrt(coef[n] / spare));
    }
    return lo * (1.0 + 1e-12);
  }

  const roundopt::RoundInputs& in;
  double a1 = 0.0;
  double d = 0.0;
  double m = 0.0;
  std::vector<double> coef;
  std::vector<double> weight;
  std::vector<std::size_t> free;  // users whose error term is non-zero
};

double error_factor(double bits) {
  const double q = std::exp2(bits) - 1.0;
  return 1.0 / (q * q);
}

// Fewest (real) bits with w / (2^B - 1)^2 <= budget.
double bits_for_budget(double w, double budget) {
  if (w <= 0.0) return 1.0;
  if (!(budget > 0.0)) return kInf;
  return std::max(1.0, std::log2(1.0 + std::sqrt(w / budget)));
}

template <class F>
double golden(F&& f, double a, double b, int iters) {
  constexpr double r = 0.6180339887498949;
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

// Scans f on the points, then refines between the best point's neighbours.
template <class F>
double scan_and_refine(F&& f, const std::vector<double>& pts, int refine_iters, double* best_value) {
  std::size_t best = 0;
  double best_f = kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double v = f(pts[i]);
    if (v < best_f) {
      best_f = v;
      best = i;
    }
  }
  double x = pts[best];
  if (std::isfinite(best_f) && pts.size() > 2) {
    const double a = pts[best == 0 ? 0 : best - 1];
    const double b = pts[std::min(best + 1, pts.size() - 1)];
    const double y = golden(f, a, b, refine_iters);
    const double fy = f(y);
    if (fy < best_f) {
      best_f = fy;
      x = y;
    }
  }
  *best_value = best_f;
  return x;
}

std::vector<double> log_points(double lo, double hi, int count) {
  std::vector<double> pts(count);
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) pts[i] = lo * std::exp(step * i);
  pts.back() = hi;
  return pts;
}

// Minimum total slot of the free users from index k on, given their
// energies and the remaining error budget. Writes the chosen bits.
double best_slots(const Setup& s, const std::vector<double>& energy, std::size_t k, double budget,
                  std::vector<double>& bits, const OracleOptions& opt) {
  const double b_cap = s.in.options.b_cap;
  const std::size_t n = s.free[k];
  const double w = s.weight[n];
  if (k + 1 == s.free.size()) {
    const double b = bits_for_budget(w, budget);
    if (b > b_cap) return kInf;
    bits[n] = b;
    return s.slot(n, b, energy[n]);
  }

  double rest = 0.0;
  for (std::size_t j = k + 1; j < s.free.size(); ++j) rest += s.weight[s.free[j]];
  const double lower = bits_for_budget(w, budget);
  if (lower >= b_cap) return kInf;
  const double upper = budget > rest ? std::min(b_cap, bits_for_budget(w, budget - rest)) : b_cap;

  // Denser sampling near `lower`, where the remaining users' bits blow up.
  const int count = std::max(8, opt.bit_points / static_cast<int>(1 + 3 * (s.free.size() - k - 2)));
  std::vector<double> pts;
  for (int i = 1; i <= count; ++i) {
    const double t = static_cast<double>(i) / count;
    pts.push_back(lower + (upper - lower) * t * t);
  }
  if (lower == 1.0 && budget - w > 0.0) pts.insert(pts.begin(), 1.0);

  std::vector<double> scratch = bits;
  auto value = [&](double b) {
    const double left = budget - w * error_factor(b);
    if (!(left > 0.0) && k + 1 < s.free.size()) return kInf;
    const double own = s.slot(n, b, energy[n]);
    if (!std::isfinite(own)) return kInf;
    return own + best_slots(s, energy, k + 1, left, scratch, opt);
  };
  double best = kInf;
  const double b = scan_and_refine(value, pts, opt.refine_iters, &best);
  if (!std::isfinite(best)) return kInf;
  bits[n] = b;
  best_slots(s, energy, k + 1, budget - w * error_factor(b), bits, opt);
  return best;
}

}  // namespace

OracleResult continuous(const roundopt::RoundInputs& in, const OracleOptions& opt) {
  Setup s(in);
  const std::size_t n_users = in.size();
  std::vector<double> ones(n_users, 1.0);
  OracleResult out;
  const double lo = s.lc_floor(ones);
  if (!std::isfinite(lo)) return out;

  std::vector<double> bits(n_users, 1.0);
  auto inner = [&](double l_c) {
    std::vector<double> energy(n_users);
    for (std::size_t n = 0; n < n_users; ++n) energy[n] = s.energy(n, l_c);
    double total = l_c;
    for (std::size_t n = 0; n < n_users; ++n) {
      if (s.weight[n] <= 0.0) total += s.slot(n, 1.0, energy[n]);
    }
    std::fill(bits.begin(), bits.end(), 1.0);
    if (!s.free.empty()) {
      double fixed_usage = 0.0;
      double all_ones = 0.0;
      for (auto n : s.free) all_ones += s.weight[n];
      if (all_ones <= in.epsilon) {
        for (auto n : s.free) total += s.slot(n, 1.0, energy[n]);
      } else {
        total += best_slots(s, energy, 0, in.epsilon - fixed_usage, bits, opt);
      }
    }
    return total;
  };

  double best = kInf;
  const double l_c =
      scan_and_refine(inner, log_points(lo, opt.lc_span * lo, opt.lc_points), opt.refine_iters, &best);
  if (!std::isfinite(best)) return out;
  out.latency = inner(l_c);
  out.l_c = l_c;
  out.bits = bits;
  out.feasible = true;
  return out;
}

OracleResult integer(const roundopt::RoundInputs& in, const OracleOptions& opt) {
  Setup s(in);
  const std::size_t n_users = in.size();
  const int b_cap = static_cast<int>(std::floor(in.options.b_cap));
  OracleResult out;
  out.latency = kInf;

  auto latency_for = [&](const std::vector<double>& bits, double* l_best) {
    const double lo = s.lc_floor(bits);
    if (!std::isfinite(lo)) return kInf;
    auto f = [&](double l_c) {
      double total = l_c;
      for (std::size_t n = 0; n < n_users; ++n) total += s.slot(n, bits[n], s.energy(n, l_c));
      return total;
    };
    double best = kInf;
    *l_best = scan_and_refine(f, log_points(lo, opt.lc_span * lo, 120), opt.refine_iters, &best);
    return best;
  };

  // Odometer over the free users except the last one.
  const std::size_t n_free = s.free.size();
  const std::size_t n_enum = n_free > 0 ? n_free - 1 : 0;
  std::vector<int> counter(n_enum, 1);
  while (true) {
    std::vector<double> bits(n_users, 1.0);
    double used = 0.0;
    for (std::size_t k = 0; k < n_enum; ++k) {
      bits[s.free[k]] = counter[k];
      used += s.weight[s.free[k]] * error_factor(counter[k]);
    }
    bool ok = true;
    if (n_free > 0) {
      const std::size_t last = s.free.back();
      const double b = std::ceil(bits_for_budget(s.weight[last], in.epsilon - used) - 1e-12);
      ok = b <= b_cap;
      bits[last] = ok ? b : 1.0;
    }
    if (ok) {
      double l_c = 0.0;
      const double v = latency_for(bits, &l_c);
      if (v < out.latency) {
        out.latency = v;
        out.l_c = l_c;
        out.bits = bits;
        out.feasible = true;
      }
    }
    std::size_t k = 0;
    while (k < n_enum && ++counter[k] > b_cap) counter[k++] = 1;
    if (k == n_enum) break;
  }
  return out;
}

}  // namespace wqfl::oracle
