// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion.
//   wqfl_acceptance          run all criteria
//   wqfl_acceptance 3 7      run the listed criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instances.hpp"
#include "wqfl/bound.hpp"
#include "wqfl/channel.hpp"
#include "wqfl/fl/mlp.hpp"
#include "wqfl/lambert_w.hpp"
#include "wqfl/oracle.hpp"
#include "wqfl/quant.hpp"
#include "wqfl/roundopt.hpp"
#include "wqfl/sim/config.hpp"
#include "wqfl/sim/experiment.hpp"

namespace {

using namespace wqfl;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void fail_if(Outcome& o, bool bad, const std::string& why) {
  if (bad) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + why;
  }
}

void note(Outcome& o, const std::string& text) { o.detail += (o.detail.empty() ? "" : "; ") + text; }

// 1. Quantizer mean and mean-squared error.
Outcome quantizer_moments() {
  Outcome o;
  constexpr int d = 100;
  constexpr int draws = 100000;
  Rng rng = derive_rng(2024, Stream::quantization, {1});
  std::vector<double> x(d);
  for (auto& v : x) v = 2.0 * standard_normal(rng);
  double worst_z = 0.0;
  for (int bits : {1, 2, 4}) {
    std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);  // of the reconstruction error
    double mse_sum = 0.0, mse_sq = 0.0;
    double lo = 0.0, hi = 0.0;
    for (int s = 0; s < draws; ++s) {
      const auto q = quant::quantize(x, bits, rng);
      lo = q.w_min;
      hi = q.w_max;
      const auto y = quant::dequantize(q);
      double err = 0.0;
      for (int j = 0; j < d; ++j) {
        const double e = y[j] - x[j];
        sum[j] += e;
        sum_sq[j] += e * e;
        err += e * e;
      }
      mse_sum += err;
      mse_sq += err * err;
    }
    for (int j = 0; j < d; ++j) {
      const double mean = sum[j] / draws;
      const double var = std::max(0.0, sum_sq[j] / draws - mean * mean);
      const double se = std::sqrt(var / draws);
      const double gap = std::abs(mean);
      if (se == 0.0) {
        fail_if(o, gap != 0.0,
                fmt("B=%d coord %d deterministic but biased by %.3g", bits, j, gap));
      } else {
        worst_z = std::max(worst_z, gap / se);
        fail_if(o, gap > 4.0 * se, fmt("B=%d coord %d off by %.2f SE", bits, j, gap / se));
      }
    }
    const double mse = mse_sum / draws;
    const double mse_se = std::sqrt(std::max(0.0, mse_sq / draws - mse * mse) / draws);
    const double bound = quant::variance_bound(d, lo, hi, bits);
    fail_if(o, mse > bound + 3.0 * mse_se,
            fmt("B=%d MSE %.6g above bound %.6g + 3 SE", bits, mse, bound));
    note(o, fmt("B=%d MSE/bound %.3f", bits, mse / bound));
  }
  note(o, fmt("worst mean deviation %.2f SE", worst_z));
  return o;
}

// 2. Lambert W residuals. Absolute for |x| <= 1, relative beyond.
Outcome lambert_residuals() {
  Outcome o;
  constexpr int points = 10000;
  const double origin = -std::exp(-1.0);
  const double lo = std::log(1e-9);
  const double hi = std::log(1e6 - origin);
  double worst = 0.0;
  double worst_x = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = origin + std::exp(lo + (hi - lo) * i / (points - 1));
    const double w = lambert_w0(x);
    const double r = std::abs(w * std::exp(w) - x) / std::max(1.0, std::abs(x));
    if (!(r <= worst)) {
      worst = r;
      worst_x = x;
    }
  }
  fail_if(o, !(worst <= 1e-12), "residual above 1e-12");
  note(o, fmt("max residual %.3g at x = %.6g", worst, worst_x));
  return o;
}

double epsilon_for(int i) {
  constexpr double choices[] = {0.01, 0.1, 1.0, 5.0};
  return choices[i % 4];
}

// 3. Round solver against the brute-force oracles.
Outcome solver_vs_oracle() {
  Outcome o;
  double worst_cont = 0.0, worst_int = 0.0, worst_kkt = 0.0;
  int compared = 0;
  for (int i = 0; i < 20; ++i) {
    const auto in = instances::random_round(100 + i, 2, epsilon_for(i));
    const auto sol = roundopt::solve_round_continuous(in);
    const auto ref = oracle::continuous(in);
    fail_if(o, sol.alloc.feasible() != ref.feasible, fmt("instance %d feasibility differs", i));
    if (!sol.alloc.feasible() || !ref.feasible) continue;
    ++compared;
    const double gap_c = std::abs(sol.alloc.latency - ref.latency) / ref.latency;
    const double kkt = roundopt::kkt_residuals(sol.alloc, sol.mult, in).max();
    const auto rounded = roundopt::round_and_resolve(sol.alloc, in);
    const auto ref_int = oracle::integer(in);
    const double gap_i = std::abs(rounded.latency - ref_int.latency) / ref_int.latency;
    worst_cont = std::max(worst_cont, gap_c);
    worst_int = std::max(worst_int, gap_i);
    worst_kkt = std::max(worst_kkt, kkt);
    fail_if(o, gap_c > 5e-3, fmt("instance %d continuous gap %.3g", i, gap_c));
    fail_if(o, gap_i > 5e-3, fmt("instance %d integer gap %.3g", i, gap_i));
    fail_if(o, !(kkt <= 1e-6), fmt("instance %d KKT residual %.3g", i, kkt));
  }
  fail_if(o, compared == 0, "no feasible instance");
  note(o, fmt("%d instances, max gap continuous %.2e integer %.2e, max KKT %.2e", compared,
              worst_cont, worst_int, worst_kkt));
  return o;
}

// 4. The uplink, energy and tolerance constraints hold with equality.
Outcome tightness() {
  Outcome o;
  int solutions = 0, c3_skipped = 0;
  double worst_up = 0.0, worst_e = 0.0, worst_c3 = 0.0;
  auto check = [&](const roundopt::RoundInputs& in, const std::string& name) {
    const auto sol = roundopt::solve_round_continuous(in);
    if (!sol.alloc.feasible()) return;
    ++solutions;
    const auto& a = sol.alloc;
    const double d = static_cast<double>(in.model_dim);
    bool all_one = true;
    for (std::size_t n = 0; n < in.size(); ++n) {
      const double payload = d * (a.bits[n] + 1.0) + static_cast<double>(in.physics.header_bits);
      const double sent = channel::uplink_bits(a.slot[n], a.energy[n], in.gains[n], in.physics);
      const double used = a.energy[n] + channel::compute_energy(in.users[n], a.freq[n], in.physics);
      const double up = std::abs(sent - payload) / payload;
      const double en = std::abs(in.users[n].e_max - used) / in.users[n].e_max;
      worst_up = std::max(worst_up, up);
      worst_e = std::max(worst_e, en);
      fail_if(o, up > 1e-6, fmt("%s user %zu uplink slack %.3g", name.c_str(), n, up));
      fail_if(o, en > 1e-6, fmt("%s user %zu energy slack %.3g", name.c_str(), n, en));
      if (a.bits[n] > 1.0 + 1e-9) all_one = false;
    }
    if (all_one) {
      ++c3_skipped;
      return;
    }
    const double c3 = std::abs(in.epsilon - roundopt::tolerance_usage(a.bits, in)) / in.epsilon;
    worst_c3 = std::max(worst_c3, c3);
    fail_if(o, c3 > 1e-6, fmt("%s tolerance slack %.3g", name.c_str(), c3));
  };
  for (int i = 0; i < 20; ++i) check(instances::random_round(100 + i, 2, epsilon_for(i)), fmt("N2#%d", i));
  for (int i = 0; i < 50; ++i) check(instances::random_round(500 + i, 10, epsilon_for(i)), fmt("N10#%d", i));
  note(o, fmt("%d solutions, max slack C1 %.2e C2 %.2e C3 %.2e, C3 skipped %d (all bits at 1)",
              solutions, worst_up, worst_e, worst_c3, c3_skipped));
  return o;
}

// 5. The proposed allocation is never slower than a baseline.
Outcome dominance() {
  Outcome o;
  int wins[3] = {0, 0, 0};
  double min_ratio[3] = {INFINITY, INFINITY, INFINITY};
  const char* names[3] = {"fixed_bits", "equal_slots", "equal_energy"};
  for (int i = 0; i < 50; ++i) {
    const auto in = instances::random_round(900 + i, 10, 0.01);
    const auto p = roundopt::solve_round(in);
    if (!p.feasible()) {
      fail_if(o, true, fmt("round %d infeasible for the proposed scheme", i));
      continue;
    }
    const roundopt::RoundAllocation base[3] = {roundopt::baseline_fixed_bits(in, 16),
                                               roundopt::baseline_equal_slots(in, p),
                                               roundopt::baseline_equal_energy(in)};
    for (int b = 0; b < 3; ++b) {
      const double other = base[b].feasible() ? base[b].latency : INFINITY;
      if (p.latency <= other) ++wins[b];
      else fail_if(o, true, fmt("round %d: %s faster (%.6g < %.6g)", i, names[b], other, p.latency));
      min_ratio[b] = std::min(min_ratio[b], other / p.latency);
    }
  }
  for (int b = 0; b < 3; ++b) note(o, fmt("%s %d/50 (min ratio %.3f)", names[b], wins[b], min_ratio[b]));
  return o;
}

sim::SimConfig synthetic_config(int rounds) {
  auto cfg = sim::reference_preset();
  cfg.rounds = rounds;
  cfg.epsilon.eps0 = 0.01;
  return cfg;
}

// 6. Bits and delay fall as the tolerance grows.
Outcome epsilon_tradeoff() {
  Outcome o;
  const std::vector<std::string> values{"0.01", "0.1", "1", "5"};
  const auto runs = sim::run_sweep(synthetic_config(20), sim::SweepAxis::epsilon, values);
  std::string bits = "bits", delay = "delay";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    fail_if(o, !runs[i].ok(), "eps " + values[i] + ": " + runs[i].message);
    bits += fmt(" %.4g", runs[i].mean_bits());
    delay += fmt(" %.4g", runs[i].mean_latency());
    if (i == 0) continue;
    fail_if(o, !(runs[i].mean_bits() < runs[i - 1].mean_bits()), "bits not decreasing at eps " + values[i]);
    fail_if(o, !(runs[i].mean_latency() < runs[i - 1].mean_latency()),
            "delay not decreasing at eps " + values[i]);
  }
  note(o, bits + " | " + delay + " for eps 0.01, 0.1, 1, 5");
  return o;
}

nlohmann::json load_golden(const std::string& name) {
  std::ifstream in(std::string(WQFL_GOLDEN_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing golden file " + name);
  return nlohmann::json::parse(in);
}

// 7. Quantized training tracks lossless training.
Outcome learning_sanity() {
  Outcome o;
  const std::vector<std::string> schemes{"proposed", "lossless"};
  const auto syn = sim::run_sweep(synthetic_config(30), sim::SweepAxis::scheme, schemes);
  for (const auto& r : syn) fail_if(o, !r.ok(), r.leg + ": " + r.message);
  const double a_q = syn[0].final_accuracy(), a_l = syn[1].final_accuracy();
  fail_if(o, a_q < 0.90, fmt("synthetic accuracy %.4f below 0.90", a_q));
  fail_if(o, std::abs(a_q - a_l) > 0.02, fmt("synthetic gap %.4f above 0.02", a_q - a_l));
  note(o, fmt("synthetic T=30 proposed %.4f lossless %.4f", a_q, a_l));

  const auto golden = load_golden("mnist_reference.json");
  auto cfg = sim::parse_config(golden.at("config").dump());
  cfg.rounds = 50;
  const auto mn = sim::run_sweep(cfg, sim::SweepAxis::scheme, schemes);
  for (const auto& r : mn) fail_if(o, !r.ok(), "mnist " + r.leg + ": " + r.message);
  const double m_q = mn[0].final_accuracy(), m_l = mn[1].final_accuracy();
  fail_if(o, std::abs(m_q - m_l) > 0.05, fmt("MNIST gap %.4f above 0.05", m_q - m_l));
  const double pin_q = golden.at("final_accuracy").at("proposed").get<double>();
  const double pin_l = golden.at("final_accuracy").at("lossless").get<double>();
  const double pin_tol = golden.at("pin_tolerance").get<double>();
  fail_if(o, std::abs(m_q - pin_q) > pin_tol, fmt("MNIST proposed %.4f differs from pinned %.4f", m_q, pin_q));
  fail_if(o, std::abs(m_l - pin_l) > pin_tol, fmt("MNIST lossless %.4f differs from pinned %.4f", m_l, pin_l));
  note(o, fmt("MNIST T=50 proposed %.4f lossless %.4f (pinned %.4f / %.4f)", m_q, m_l, pin_q, pin_l));
  return o;
}

// 8. A decaying tolerance sits between the two constant ones.
Outcome decaying_epsilon() {
  Outcome o;
  const std::vector<std::string> values{"0.1", "0.01", "0.1:0.01"};
  const auto runs = sim::run_sweep(synthetic_config(30), sim::SweepAxis::epsilon, values);
  for (const auto& r : runs) fail_if(o, !r.ok(), r.leg + ": " + r.message);
  const double hi = runs[0].mean_latency(), lo_eps = runs[1].mean_latency(), dec = runs[2].mean_latency();
  fail_if(o, !(dec > hi && dec < lo_eps), "decaying delay not strictly between the constant legs");
  const double gap = runs[2].final_accuracy() - runs[1].final_accuracy();
  fail_if(o, std::abs(gap) > 0.02, fmt("accuracy gap %.4f to the 0.01 leg", gap));
  note(o, fmt("delay eps=0.1 %.4f < decaying %.4f < eps=0.01 %.4f; accuracy %.4f vs %.4f", hi, dec, lo_eps,
              runs[2].final_accuracy(), runs[1].final_accuracy()));
  return o;
}

// 9. Convergence bound evaluator.
Outcome bound_checks() {
  Outcome o;
  bound::BoundConstants k;
  k.L = 4;
  k.mu = 1;
  k.G2 = 2;
  k.sigma2 = std::vector<double>(10, 0.5);
  k.Gamma = 0.3;
  k.tau = 2;
  k.gamma = 6;
  k.Delta0 = 3;
  const std::vector<double> p(10, 0.1);
  auto zero = [](int, std::size_t) { return 0.0; };
  double prev = INFINITY, c0 = 0.0, worst_c = 0.0;
  for (int T = 1; T <= 2000; T += 7) {
    const auto b = bound::convergence_bound(T, k, zero, p);
    fail_if(o, !(b.total < prev), fmt("lossless bound not decreasing at T=%d", T));
    prev = b.total;
    const double c = b.first_term * (k.gamma + T);
    if (T == 1) c0 = c;
    worst_c = std::max(worst_c, std::abs(c - c0) / c0);
  }
  fail_if(o, worst_c > 1e-9, fmt("first_term*(gamma+T) varies by %.3g", worst_c));

  auto j2 = [](int j, std::size_t n) { return 1e-3 * (1.0 + 0.1 * n) * std::exp(-0.01 * j); };
  double worst_lin = 0.0;
  for (int T : {1, 10, 100, 1000}) {
    const auto a = bound::convergence_bound(T, k, j2, p);
    const auto b = bound::convergence_bound(T, k, [&](int j, std::size_t n) { return 2.0 * j2(j, n); }, p);
    worst_lin = std::max(worst_lin, std::abs(b.gap_term - 2.0 * a.gap_term) / a.gap_term);
  }
  fail_if(o, worst_lin > 1e-12, fmt("doubling J2 off by %.3g", worst_lin));

  const auto w = bound::discount_weights(500, k.gamma);
  bool increasing = true;
  for (std::size_t j = 1; j < w.size(); ++j) increasing = increasing && w[j] > w[j - 1];
  fail_if(o, !increasing, "discount weights not increasing in j");
  note(o, fmt("first-term drift %.2e, doubling error %.2e, weights %.3g..%.3g", worst_c, worst_lin,
              w.front(), w.back()));
  return o;
}

// 10. MLP gradient against central differences.
Outcome gradient_check() {
  Outcome o;
  const fl::Mlp model;
  Rng rng = derive_rng(77, Stream::init);
  const Eigen::VectorXd w = model.init_params(rng);
  fl::SyntheticSpec spec;
  Rng data_rng = derive_rng(77, Stream::dataset);
  const auto data = fl::make_synthetic(spec, 50, data_rng);
  Eigen::VectorXd grad;
  model.loss_and_grad(w, data.inputs, data.labels, &grad);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto j = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(w.size())));
    const double h = 1e-5 * std::max(1.0, std::abs(w[j]));
    Eigen::VectorXd wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double fd = (model.loss_and_grad(wp, data.inputs, data.labels, nullptr) -
                       model.loss_and_grad(wm, data.inputs, data.labels, nullptr)) / (2.0 * h);
    const double rel = std::abs(fd - grad[j]) / std::max({std::abs(fd), std::abs(grad[j]), 1e-8});
    worst = std::max(worst, rel);
    fail_if(o, rel > 1e-4, fmt("param %ld relative error %.3g", static_cast<long>(j), rel));
  }
  note(o, fmt("20 coordinates, max relative error %.2e", worst));
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
  double time_limit;  // seconds, 0 for none
};

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, Criterion> criteria{
      {1, {"quantizer moments", quantizer_moments, 10.0}},
      {2, {"Lambert W residual", lambert_residuals, 1.0}},
      {3, {"solver vs oracle", solver_vs_oracle, 60.0}},
      {4, {"constraint tightness", tightness, 0.0}},
      {5, {"baseline dominance", dominance, 0.0}},
      {6, {"epsilon trade-off", epsilon_tradeoff, 0.0}},
      {7, {"learning sanity", learning_sanity, 600.0}},
      {8, {"decaying epsilon", decaying_epsilon, 0.0}},
      {9, {"bound evaluator", bound_checks, 0.0}},
      {10, {"gradient check", gradient_check, 0.0}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [id, c] : criteria) selected.push_back(id);
  }

  int failures = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("[FAIL] criterion %d: unknown\n", id);
      ++failures;
      continue;
    }
    const auto& c = it->second;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0.0 && secs > c.time_limit) {
      out.pass = false;
      note(out, fmt("runtime %.2f s over the %.0f s limit", secs, c.time_limit));
    }
    std::printf("[%s] criterion %d (%s): %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
