#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wqfl/sim/config.hpp"

namespace wqfl::sim {

/// Everything fixed before the first round: user placement and data.
struct Scenario {
  std::vector<channel::UserProfile> users;
  std::vector<fl::DataShard> shards;
  std::vector<double> weights;  // p_n
  fl::Dataset train;            // union of the shards
  fl::Dataset test;
};

/// Draws c_n and d_n for every user and applies the overrides. Weights are
/// 1/N until the data is partitioned.
std::vector<channel::UserProfile> make_users(const SimConfig& cfg);

/// Draws users and loads and partitions the data. Throws ConfigError when
/// the dataset cannot be found or is too small.
Scenario make_scenario(const SimConfig& cfg);

/// Channel gains of one round. They depend only on the seed, the placement
/// and the round, so runs with the same seed see the same channels.
std::vector<double> round_gains(const SimConfig& cfg, std::span<const channel::UserProfile> users,
                                int round);

/// One row of the metrics file.
struct RoundRecord {
  int round = 0;
  double sim_time = 0.0;  // cumulative latency, s
  double latency = 0.0;   // l_c + sum of slots
  double l_c = 0.0;
  double epsilon = 0.0;
  double c3_slack = 0.0;  // (eps - used) / eps
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> bits, slot, energy, freq, gain, delta;
};

struct RunResult {
  std::string leg;
  std::vector<RoundRecord> rounds;
  std::vector<std::string> diagnostics;  // one JSON object per round
  bool infeasible = false;  // the allocator could not serve a round
  bool failed = false;      // training diverged
  std::string message;

  bool ok() const { return !infeasible && !failed; }
  double final_accuracy() const;
  double mean_latency() const;
  double mean_bits() const;  // per user and round
};

/// Runs the global-round loop. Stops early when a round is infeasible or
/// training diverges; the result says which.
RunResult run_experiment(const SimConfig& cfg, const std::string& leg = "");
RunResult run_experiment(const SimConfig& cfg, const Scenario& scenario, const std::string& leg = "");

void write_metrics_header(std::ostream& out, int n_users, bool with_leg);
void write_metrics_rows(std::ostream& out, const RunResult& run, bool with_leg);
void write_diagnostics(std::ostream& out, const RunResult& run);

enum class SweepAxis { epsilon, scheme, partition };

SweepAxis parse_axis(const std::string& name);

struct SweepLeg {
  std::string label;
  SimConfig cfg;
};

/// One configuration per value, all sharing the base seed.
///   epsilon:   "0.1" (constant) or "0.1:0.01" (geometric decay to 0.01)
///   scheme:    "proposed", "fixed_bits", "fixed_bits:8", "equal_slots", ...
///   partition: "iid", "noniid", "noniid:3"
std::vector<SweepLeg> sweep_legs(const SimConfig& base, SweepAxis axis,
                                 std::span<const std::string> values);

std::vector<RunResult> run_sweep(const SimConfig& base, SweepAxis axis,
                                 std::span<const std::string> values);

}  // namespace wqfl::sim
