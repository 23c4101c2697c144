#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wqfl/channel.hpp"
#include "wqfl/fl/dataset.hpp"
#include "wqfl/fl/mlp.hpp"
#include "wqfl/fl/trainer.hpp"
#include "wqfl/roundopt.hpp"

namespace wqfl::sim {

/// Raised for anything wrong with a configuration: bad values, unknown keys,
/// unreadable files or missing datasets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { proposed, fixed_bits, equal_slots, equal_energy, lossless };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

/// Tolerance schedule. Constant unless eps_final or ratio is set.
struct EpsilonSpec {
  double eps0 = 0.01;
  std::optional<double> eps_final;  // reached at the last round
  std::optional<double> ratio;      // per-round decay factor

  fl::EpsilonSchedule make(int rounds) const;
};

struct DatasetSpec {
  enum class Kind { synthetic, mnist };
  Kind kind = Kind::synthetic;
  std::string mnist_dir;          // empty: resolved from WQFL_DATA_DIR
  std::size_t train_limit = 0;    // 0 keeps every file sample
  std::size_t test_limit = 1000;
  fl::SyntheticSpec synthetic;
  std::size_t synthetic_train = 3000;
  std::size_t synthetic_test = 1000;
};

/// Per-user values that replace the randomly drawn ones.
struct UserOverride {
  int id = 0;
  std::optional<double> cycles_per_bit;
  std::optional<double> workload_bits;
  std::optional<double> f_max;
  std::optional<double> e_max;
  std::optional<double> distance;
};

struct SimConfig {
  int n_users = 10;
  double cycles_min = 10.0;  // c_n ~ U(cycles_min, cycles_max)
  double cycles_max = 40.0;
  double distance_max = 1000.0;  // d_n ~ U(0, distance_max), at least distance_min
  double distance_min = 1.0;
  double workload_bits = 1e6;
  double f_max = 1.5e9;
  double e_max = 0.3;
  std::vector<UserOverride> overrides;

  channel::PhysicsConfig physics;
  fl::MlpShape model;
  fl::TrainerConfig trainer;
  EpsilonSpec epsilon;
  int rounds = 20;
  DatasetSpec dataset;
  fl::PartitionSpec partition;
  Scheme scheme = Scheme::proposed;
  int fixed_bits = 16;
  int lossless_bits = 32;  // payload size charged to the lossless scheme
  roundopt::SolverOptions solver;
  bool oracle_check = false;  // compare with the grid oracle (N <= 3 only)
  std::uint64_t seed = 1;
  std::string metrics_path;      // CSV, empty: none
  std::string diagnostics_path;  // JSON lines, empty: none

  /// Throws ConfigError.
  void validate() const;
};

/// The simulation parameters of the reference setup: 10 users, 0.3 MHz,
/// -174 dBm/Hz, zeta = 1e-27, 0.3 J, 1.5 GHz, 1 Mbit, m = 64, beta = 3.75.
SimConfig reference_preset();

/// Applies a JSON document on top of `base`. Unknown keys are errors.
SimConfig parse_config(const std::string& json_text, const SimConfig& base = reference_preset());
SimConfig load_config(const std::filesystem::path& path, const SimConfig& base = reference_preset());

/// Sets one value addressed by a dotted key, e.g. "trainer.learning_rate"
/// or "epsilon.eps0". The value is parsed as JSON, falling back to a string.
void apply_override(SimConfig& cfg, const std::string& key, const std::string& value);

/// Full configuration as pretty-printed JSON; parse_config accepts it.
std::string dump_config(const SimConfig& cfg);

/// Directory holding the MNIST files: the configured one, else
/// $WQFL_DATA_DIR/mnist or $WQFL_DATA_DIR, else data/mnist.
std::filesystem::path resolve_mnist_dir(const DatasetSpec& spec);

inline constexpr const char* kDataDirEnv = "WQFL_DATA_DIR";

}  // namespace wqfl::sim
