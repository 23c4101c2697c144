#include "wqfl/sim/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "wqfl/oracle.hpp"
#include "wqfl/quant.hpp"

namespace wqfl::sim {
namespace {

using nlohmann::json;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

fl::Dataset concat(std::span<const fl::DataShard> shards) {
  Eigen::Index total = 0;
  for (const auto& s : shards) total += static_cast<Eigen::Index>(s.data.size());
  fl::Dataset out;
  out.num_classes = shards.front().data.num_classes;
  out.inputs.resize(shards.front().data.dim(), total);
  Eigen::Index col = 0;
  for (const auto& s : shards) {
    out.inputs.middleCols(col, static_cast<Eigen::Index>(s.data.size())) = s.data.inputs;
    out.labels.insert(out.labels.end(), s.data.labels.begin(), s.data.labels.end());
    col += static_cast<Eigen::Index>(s.data.size());
  }
  return out;
}

struct Allocation {
  roundopt::RoundAllocation alloc;
  std::optional<roundopt::ContinuousSolution> continuous;
};

Allocation allocate(const SimConfig& cfg, const roundopt::RoundInputs& in) {
  Allocation a;
  switch (cfg.scheme) {
    case Scheme::proposed: {
      a.continuous = roundopt::solve_round_continuous(in);
      a.alloc = roundopt::round_and_resolve(a.continuous->alloc, in);
      break;
    }
    case Scheme::fixed_bits:
      a.alloc = roundopt::baseline_fixed_bits(in, cfg.fixed_bits);
      break;
    case Scheme::equal_slots:
      a.alloc = roundopt::baseline_equal_slots(in);
      break;
    case Scheme::equal_energy:
      a.alloc = roundopt::baseline_equal_energy(in);
      break;
    case Scheme::lossless:
      a.alloc = roundopt::baseline_fixed_bits(in, cfg.lossless_bits);
      break;
  }
  return a;
}

json alloc_json(const roundopt::RoundAllocation& a) {
  return {{"status", roundopt::to_string(a.status)},
          {"l_c", a.l_c},
          {"freq", a.freq},
          {"energy", a.energy},
          {"slot", a.slot},
          {"bits", a.bits},
          {"latency", a.latency},
          {"b_cap_hit", a.b_cap_hit}};
}

json diagnostics(const SimConfig& cfg, const roundopt::RoundInputs& in, const Allocation& a,
                 const std::string& leg, int round) {
  json j = {{"leg", leg},
            {"round", round},
            {"scheme", to_string(cfg.scheme)},
            {"epsilon", in.epsilon},
            {"gains", in.gains},
            {"delta", in.delta},
            {"allocation", alloc_json(a.alloc)}};
  if (!a.alloc.message.empty()) j["message"] = a.alloc.message;
  if (a.alloc.feasible()) {
    const auto c = roundopt::check_constraints(a.alloc, in);
    j["constraints"] = {{"uplink", c.uplink},
                        {"energy", c.energy},
                        {"tolerance", c.tolerance},
                        {"frequency", c.frequency},
                        {"min_bits", c.min_bits}};
  }
  if (a.continuous && a.continuous->alloc.feasible()) {
    const auto& s = *a.continuous;
    const auto k = roundopt::kkt_residuals(s.alloc, s.mult, in);
    j["continuous"] = alloc_json(s.alloc);
    j["multipliers"] = {{"lambda1", s.mult.lambda1},
                        {"lambda2", s.mult.lambda2},
                        {"lambda3", s.mult.lambda3},
                        {"lambda4", s.mult.lambda4},
                        {"lambda5", s.mult.lambda5}};
    j["kkt"] = {{"compute_time", k.compute_time},
                {"energy", k.energy},
                {"slot", k.slot},
                {"bits_uplink", k.bits_uplink},
                {"bits_stationarity", k.bits_stationarity},
                {"nonnegativity", k.nonnegativity},
                {"slackness", k.slackness},
                {"max", k.max()}};
  }
  j["oracle_checked"] = false;
  if (cfg.oracle_check && a.alloc.feasible() && cfg.scheme == Scheme::proposed) {
    const auto o = oracle::integer(in);
    j["oracle_checked"] = true;
    j["oracle_latency"] = o.latency;
    j["oracle_gap"] = o.feasible ? (a.alloc.latency - o.latency) / o.latency : 0.0;
  }
  return j;
}

}  // namespace

std::vector<channel::UserProfile> make_users(const SimConfig& cfg) {
  cfg.validate();
  std::vector<channel::UserProfile> users;
  Rng place = derive_rng(cfg.seed, Stream::placement);
  for (int n = 0; n < cfg.n_users; ++n) {
    channel::UserProfile u;
    u.id = n;
    u.cycles_per_bit = cfg.cycles_min + (cfg.cycles_max - cfg.cycles_min) * uniform01(place);
    u.distance = std::max(cfg.distance_min, cfg.distance_max * uniform01(place));
    u.workload_bits = cfg.workload_bits;
    u.f_max = cfg.f_max;
    u.e_max = cfg.e_max;
    u.weight = 1.0 / cfg.n_users;
    users.push_back(u);
  }
  for (const auto& o : cfg.overrides) {
    auto& u = users[o.id];
    if (o.cycles_per_bit) u.cycles_per_bit = *o.cycles_per_bit;
    if (o.workload_bits) u.workload_bits = *o.workload_bits;
    if (o.f_max) u.f_max = *o.f_max;
    if (o.e_max) u.e_max = *o.e_max;
    if (o.distance) u.distance = *o.distance;
  }
  return users;
}

Scenario make_scenario(const SimConfig& cfg) {
  Scenario s;
  s.users = make_users(cfg);

  fl::Dataset pool;
  try {
    if (cfg.dataset.kind == DatasetSpec::Kind::mnist) {
      const auto dir = resolve_mnist_dir(cfg.dataset);
      pool = fl::load_mnist(dir, true, cfg.dataset.train_limit);
      s.test = fl::load_mnist(dir, false, cfg.dataset.test_limit);
    } else {
      Rng train_rng = derive_rng(cfg.dataset.synthetic.seed, Stream::dataset, {1});
      Rng test_rng = derive_rng(cfg.dataset.synthetic.seed, Stream::dataset, {2});
      pool = fl::make_synthetic(cfg.dataset.synthetic, cfg.dataset.synthetic_train, train_rng);
      s.test = fl::make_synthetic(cfg.dataset.synthetic, cfg.dataset.synthetic_test, test_rng);
    }
    Rng part = derive_rng(cfg.seed, Stream::partition);
    s.shards = fl::partition(pool, cfg.n_users, cfg.partition, part);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  s.weights = fl::shard_weights(s.shards);
  for (int n = 0; n < cfg.n_users; ++n) s.users[n].weight = s.weights[n];
  s.train = concat(s.shards);
  return s;
}

std::vector<double> round_gains(const SimConfig& cfg, std::span<const channel::UserProfile> users,
                                 int round) {
  Rng rng = derive_rng(cfg.seed, Stream::fading, {static_cast<std::uint64_t>(round)});
  return channel::sample_channels(users, cfg.physics, rng, round).gains;
}

RunResult run_experiment(const SimConfig& cfg, const std::string& leg) {
  return run_experiment(cfg, make_scenario(cfg), leg);
}

RunResult run_experiment(const SimConfig& cfg, const Scenario& sc, const std::string& leg) {
  cfg.validate();
  const int n_users = cfg.n_users;
  const fl::Mlp model(cfg.model);
  const auto schedule = cfg.epsilon.make(cfg.rounds);

  Rng init = derive_rng(cfg.seed, Stream::init);
  Eigen::VectorXd w = model.init_params(init);
  std::vector<Rng> train_rng, quant_rng;
  for (int n = 0; n < n_users; ++n) {
    train_rng.push_back(derive_rng(cfg.seed, Stream::training, {static_cast<std::uint64_t>(n)}));
    quant_rng.push_back(derive_rng(cfg.seed, Stream::quantization, {static_cast<std::uint64_t>(n)}));
  }
  std::vector<fl::OptimizerState> opt_state(n_users);

  RunResult out;
  out.leg = leg;
  double sim_time = 0.0;
  for (int t = 0; t < cfg.rounds; ++t) {
    roundopt::RoundInputs in;
    in.users = sc.users;
    in.gains = round_gains(cfg, sc.users, t);
    in.epsilon = schedule(t);
    in.model_dim = model.num_params();
    in.physics = cfg.physics;
    in.options = cfg.solver;

    std::vector<Eigen::VectorXd> deltas(n_users);
    try {
      for (int n = 0; n < n_users; ++n) {
        auto r = fl::local_update(model, w, sc.shards[n].data, cfg.trainer, opt_state[n], t, train_rng[n]);
        deltas[n] = std::move(r.delta_w);
        in.delta.push_back(r.delta);
      }
    } catch (const std::runtime_error& e) {
      out.failed = true;
      out.message = e.what();
      return out;
    }

    const Allocation a = allocate(cfg, in);
    out.diagnostics.push_back(diagnostics(cfg, in, a, leg, t).dump());
    if (!a.alloc.feasible()) {
      out.infeasible = true;
      out.message = "round " + std::to_string(t) + ": " + a.alloc.message;
      return out;
    }

    if (cfg.scheme == Scheme::lossless) {
      w = fl::aggregate_exact(w, deltas, sc.weights);
    } else {
      std::vector<quant::QuantizedUpdate> updates;
      for (int n = 0; n < n_users; ++n) {
        const int bits = static_cast<int>(a.alloc.bits[n]);
        updates.push_back(quant::quantize({deltas[n].data(), static_cast<std::size_t>(deltas[n].size())},
                                          bits, quant_rng[n], cfg.physics.header_bits));
      }
      w = fl::aggregate(w, updates, sc.weights);
    }
    sim_time += a.alloc.latency;

    RoundRecord r;
    r.round = t;
    r.sim_time = sim_time;
    r.latency = a.alloc.latency;
    r.l_c = a.alloc.l_c;
    r.epsilon = in.epsilon;
    r.c3_slack = (in.epsilon - roundopt::tolerance_usage(a.alloc.bits, in)) / in.epsilon;
    r.train_loss = model.evaluate(w, sc.train).loss;
    const auto test = model.evaluate(w, sc.test);
    r.test_loss = test.loss;
    r.test_accuracy = test.accuracy;
    r.bits = a.alloc.bits;
    r.slot = a.alloc.slot;
    r.energy = a.alloc.energy;
    r.freq = a.alloc.freq;
    r.gain = in.gains;
    r.delta = in.delta;
    out.rounds.push_back(std::move(r));
  }
  return out;
}

double RunResult::final_accuracy() const { return rounds.empty() ? 0.0 : rounds.back().test_accuracy; }

double RunResult::mean_latency() const {
  if (rounds.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rounds) s += r.latency;
  return s / static_cast<double>(rounds.size());
}

double RunResult::mean_bits() const {
  double s = 0.0;
  std::size_t count = 0;
  for (const auto& r : rounds) {
    for (double b : r.bits) s += b;
    count += r.bits.size();
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

void write_metrics_header(std::ostream& out, int n_users, bool with_leg) {
  if (with_leg) out << "leg,";
  out << "round,sim_time,round_latency,l_c,epsilon,c3_slack,train_loss,test_loss,test_accuracy,mean_bits";
  for (const char* field : {"B", "l_up", "E", "f", "g", "delta"}) {
    for (int n = 0; n < n_users; ++n) out << ',' << field << '_' << n;
  }
  out << '\n';
}

void write_metrics_rows(std::ostream& out, const RunResult& run, bool with_leg) {
  for (const auto& r : run.rounds) {
    if (with_leg) out << run.leg << ',';
    const double mean_bits =
        r.bits.empty() ? 0.0 : std::accumulate(r.bits.begin(), r.bits.end(), 0.0) / r.bits.size();
    out << r.round << ',' << num(r.sim_time) << ',' << num(r.latency) << ',' << num(r.l_c) << ','
        << num(r.epsilon) << ',' << num(r.c3_slack) << ',' << num(r.train_loss) << ','
        << num(r.test_loss) << ',' << num(r.test_accuracy) << ',' << num(mean_bits);
    for (const auto* v : {&r.bits, &r.slot, &r.energy, &r.freq, &r.gain, &r.delta}) {
      for (double x : *v) out << ',' << num(x);
    }
    out << '\n';
  }
}

void write_diagnostics(std::ostream& out, const RunResult& run) {
  for (const auto& line : run.diagnostics) out << line << '\n';
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "epsilon") return SweepAxis::epsilon;
  if (name == "scheme") return SweepAxis::scheme;
  if (name == "partition") return SweepAxis::partition;
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::vector<SweepLeg> sweep_legs(const SimConfig& base, SweepAxis axis,
                                 std::span<const std::string> values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepLeg> legs;
  for (const auto& value : values) {
    SweepLeg leg{value, base};
    const auto colon = value.find(':');
    const std::string head = value.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : value.substr(colon + 1);
    auto number = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return x;
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in sweep value '" + value + "'");
      }
    };
    switch (axis) {
      case SweepAxis::epsilon:
        leg.cfg.epsilon = EpsilonSpec{number(head), std::nullopt, std::nullopt};
        if (!tail.empty()) leg.cfg.epsilon.eps_final = number(tail);
        break;
      case SweepAxis::scheme:
        leg.cfg.scheme = parse_scheme(head);
        if (!tail.empty()) {
          if (leg.cfg.scheme != Scheme::fixed_bits) throw ConfigError("only fixed_bits takes a parameter");
          leg.cfg.fixed_bits = static_cast<int>(number(tail));
        }
        break;
      case SweepAxis::partition:
        if (head == "iid") {
          leg.cfg.partition.mode = fl::PartitionMode::iid;
        } else if (head == "noniid") {
          leg.cfg.partition.mode = fl::PartitionMode::noniid;
          if (!tail.empty()) leg.cfg.partition.labels_per_user = static_cast<int>(number(tail));
        } else {
          throw ConfigError("unknown partition '" + head + "'");
        }
        break;
    }
    leg.cfg.validate();
    legs.push_back(std::move(leg));
  }
  return legs;
}

std::vector<RunResult> run_sweep(const SimConfig& base, SweepAxis axis,
                                 std::span<const std::string> values) {
  const auto legs = sweep_legs(base, axis, values);
  std::vector<RunResult> runs;
  // Legs of an epsilon or scheme sweep share users and data.
  std::optional<Scenario> shared;
  if (axis != SweepAxis::partition) shared = make_scenario(base);
  for (const auto& leg : legs) {
    runs.push_back(shared ? run_experiment(leg.cfg, *shared, leg.label)
                          : run_experiment(leg.cfg, leg.label));
  }
  return runs;
}

}  // namespace wqfl::sim
