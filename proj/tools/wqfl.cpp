// Command line driver: run, sweep, bound, oracle.
//
// Exit status: 0 success, 1 runtime failure (e.g. diverged training),
// 2 infeasible round, 3 configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wqfl/bound.hpp"
#include "wqfl/oracle.hpp"
#include "wqfl/roundopt.hpp"
#include "wqfl/sim/config.hpp"
#include "wqfl/sim/experiment.hpp"

namespace {

using namespace wqfl;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::string metrics_path;
  std::string diagnostics_path;
  std::string scheme;
  int rounds = 0;
  long long seed = -1;
  double epsilon = 0.0;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
  cmd->add_option("--preset", o.preset, "Start from a named preset")->check(CLI::IsMember({"reference"}));
  cmd->add_option("-s,--set", o.sets, "Override a config value, e.g. trainer.learning_rate=0.001");
  cmd->add_option("-o,--metrics", o.metrics_path, "CSV metrics output");
  cmd->add_option("-d,--diagnostics", o.diagnostics_path, "JSON lines diagnostics output");
  cmd->add_option("--scheme", o.scheme, "proposed, fixed_bits, equal_slots, equal_energy or lossless");
  cmd->add_option("-T,--rounds", o.rounds, "Number of global rounds");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--epsilon", o.epsilon, "Constant error tolerance");
  cmd->add_flag("--print-config", o.print_config, "Print the effective configuration and exit");
}

sim::SimConfig build_config(const CommonOptions& o) {
  sim::SimConfig cfg = sim::reference_preset();
  if (!o.config_path.empty()) cfg = sim::load_config(o.config_path, cfg);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sim::ConfigError("--set expects key=value, got '" + kv + "'");
    sim::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.scheme.empty()) cfg.scheme = sim::parse_scheme(o.scheme);
  if (o.rounds > 0) cfg.rounds = o.rounds;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.epsilon > 0.0) cfg.epsilon = sim::EpsilonSpec{o.epsilon, std::nullopt, std::nullopt};
  if (!o.metrics_path.empty()) cfg.metrics_path = o.metrics_path;
  if (!o.diagnostics_path.empty()) cfg.diagnostics_path = o.diagnostics_path;
  cfg.validate();
  return cfg;
}

std::unique_ptr<std::ofstream> open_out(const std::string& path) {
  if (path.empty()) return nullptr;
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw sim::ConfigError("cannot write " + path);
  return f;
}

int report(const std::vector<sim::RunResult>& runs) {
  int code = kExitOk;
  for (const auto& r : runs) {
    const std::string name = r.leg.empty() ? "run" : "leg " + r.leg;
    if (r.infeasible) {
      std::cerr << name << ": infeasible: " << r.message << '\n';
      code = std::max(code, kExitInfeasible);
    } else if (r.failed) {
      std::cerr << name << ": failed: " << r.message << '\n';
      if (code == kExitOk) code = kExitFailure;
    } else {
      std::fprintf(stderr, "%s: %zu rounds, sim_time %.6g s, mean latency %.6g s, mean bits %.4g, accuracy %.4f\n",
                   name.c_str(), r.rounds.size(), r.rounds.empty() ? 0.0 : r.rounds.back().sim_time,
                   r.mean_latency(), r.mean_bits(), r.final_accuracy());
    }
  }
  return code;
}

int cmd_run(const CommonOptions& o) {
  const auto cfg = build_config(o);
  if (o.print_config) {
    std::cout << sim::dump_config(cfg) << '\n';
    return kExitOk;
  }
  auto metrics = open_out(cfg.metrics_path);
  auto diag = open_out(cfg.diagnostics_path);
  const auto run = sim::run_experiment(cfg);
  std::ostream& out = metrics ? *metrics : std::cout;
  sim::write_metrics_header(out, cfg.n_users, false);
  sim::write_metrics_rows(out, run, false);
  if (diag) sim::write_diagnostics(*diag, run);
  return report({run});
}

int cmd_sweep(const CommonOptions& o, const std::string& axis, const std::vector<std::string>& values) {
  const auto cfg = build_config(o);
  auto metrics = open_out(cfg.metrics_path);
  auto diag = open_out(cfg.diagnostics_path);
  const auto runs = sim::run_sweep(cfg, sim::parse_axis(axis), values);
  std::ostream& out = metrics ? *metrics : std::cout;
  sim::write_metrics_header(out, cfg.n_users, true);
  for (const auto& r : runs) {
    sim::write_metrics_rows(out, r, true);
    if (diag) sim::write_diagnostics(*diag, r);
  }
  return report(runs);
}

struct BoundOptions {
  bound::BoundConstants k;
  int t_max = 100;
  int t_step = 1;
  double j2 = 0.0;
  int users = 10;
};

int cmd_bound(BoundOptions o) {
  if (o.k.sigma2.empty()) o.k.sigma2.assign(o.users, 0.0);
  if (static_cast<int>(o.k.sigma2.size()) != o.users) {
    throw sim::ConfigError("--sigma2 needs one value per user");
  }
  if (o.t_max < 1 || o.t_step < 1) throw sim::ConfigError("--T and --step must be >= 1");
  try {
    o.k.validate();
  } catch (const std::invalid_argument& e) {
    throw sim::ConfigError(e.what());
  }
  std::vector<double> p(o.users, 1.0 / o.users);
  const double j2 = o.j2;
  std::cout << "T,first_term,gap_term,total\n";
  for (int T = 1; T <= o.t_max; T += o.t_step) {
    const auto b = bound::convergence_bound(T, o.k, [j2](int, std::size_t) { return j2; }, p);
    std::printf("%d,%.17g,%.17g,%.17g\n", T, b.first_term, b.gap_term, b.total);
  }
  return kExitOk;
}

struct OracleCmdOptions {
  int round = 0;
  std::vector<double> delta;
  bool integer_only = false;
};

int cmd_oracle(const CommonOptions& o, const OracleCmdOptions& oo) {
  const auto cfg = build_config(o);
  if (cfg.n_users > 3) throw sim::ConfigError("the grid oracle handles at most three users");
  roundopt::RoundInputs in;
  in.users = sim::make_users(cfg);
  in.gains = sim::round_gains(cfg, in.users, oo.round);
  in.delta = oo.delta.empty() ? std::vector<double>(in.users.size(), 1.0) : oo.delta;
  if (in.delta.size() != in.users.size()) throw sim::ConfigError("--delta needs one value per user");
  in.epsilon = cfg.epsilon.make(cfg.rounds)(oo.round);
  in.model_dim = fl::MlpShape(cfg.model).num_params();
  in.physics = cfg.physics;
  in.options = cfg.solver;
  try {
    in.validate();
  } catch (const std::invalid_argument& e) {
    throw sim::ConfigError(e.what());
  }

  nlohmann::json j;
  j["gains"] = in.gains;
  j["delta"] = in.delta;
  j["epsilon"] = in.epsilon;
  const auto cont = roundopt::solve_round_continuous(in);
  const auto integ = roundopt::round_and_resolve(cont.alloc, in);
  j["solver"] = {{"status", roundopt::to_string(integ.status)},
                 {"continuous_latency", cont.alloc.latency},
                 {"continuous_bits", cont.alloc.bits},
                 {"integer_latency", integ.latency},
                 {"integer_bits", integ.bits}};
  if (!oo.integer_only) {
    const auto oc = oracle::continuous(in);
    j["oracle_continuous"] = {{"feasible", oc.feasible}, {"latency", oc.latency}, {"bits", oc.bits}, {"l_c", oc.l_c}};
    if (oc.feasible && cont.alloc.feasible()) {
      j["continuous_gap"] = (cont.alloc.latency - oc.latency) / oc.latency;
    }
  }
  const auto oi = oracle::integer(in);
  j["oracle_integer"] = {{"feasible", oi.feasible}, {"latency", oi.latency}, {"bits", oi.bits}, {"l_c", oi.l_c}};
  if (oi.feasible && integ.feasible()) j["integer_gap"] = (integ.latency - oi.latency) / oi.latency;
  std::cout << j.dump(2) << '\n';
  return integ.feasible() ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning over a wireless uplink with quantized updates"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one experiment and write per-round metrics");
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run paired experiments along one axis");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "epsilon, scheme or partition")->required();
  sweep->add_option("--values", values, "Leg values, e.g. 0.01,0.1 or 0.1:0.01")->required()->delimiter(',');

  BoundOptions bound_opts;
  auto* bnd = app.add_subcommand("bound", "Evaluate the convergence bound for T = 1..T_max");
  bnd->add_option("--L", bound_opts.k.L, "Smoothness constant")->capture_default_str();
  bnd->add_option("--mu", bound_opts.k.mu, "Strong convexity constant")->capture_default_str();
  bnd->add_option("--G2", bound_opts.k.G2, "Squared gradient norm bound")->capture_default_str();
  bnd->add_option("--sigma2", bound_opts.k.sigma2, "Per-user gradient variances")->delimiter(',');
  bnd->add_option("--Gamma", bound_opts.k.Gamma, "Non-IID degree")->capture_default_str();
  bnd->add_option("--tau", bound_opts.k.tau, "Local steps")->capture_default_str();
  bnd->add_option("--gamma", bound_opts.k.gamma, "Learning-rate offset")->capture_default_str();
  bnd->add_option("--Delta0", bound_opts.k.Delta0, "Initial squared distance to the optimum")->capture_default_str();
  bnd->add_option("--users", bound_opts.users, "Number of users (equal weights)")->capture_default_str();
  bnd->add_option("--J2", bound_opts.j2, "Quantization error per user and round")->capture_default_str();
  bnd->add_option("--T", bound_opts.t_max, "Largest horizon")->capture_default_str();
  bnd->add_option("--step", bound_opts.t_step, "Horizon step")->capture_default_str();

  CommonOptions oracle_opts;
  OracleCmdOptions oracle_cmd;
  auto* orc = app.add_subcommand("oracle", "Compare the round solver with brute-force search (N <= 3)");
  add_common(orc, oracle_opts);
  orc->add_option("--round", oracle_cmd.round, "Round whose channels are used")->capture_default_str();
  orc->add_option("--delta", oracle_cmd.delta, "Per-user range scale delta_n")->delimiter(',');
  orc->add_flag("--integer-only", oracle_cmd.integer_only, "Skip the continuous oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, axis, values);
    if (*bnd) return cmd_bound(bound_opts);
    if (*orc) return cmd_oracle(oracle_opts, oracle_cmd);
  } catch (const sim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
