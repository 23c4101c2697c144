#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "wqfl/fl/dataset.hpp"
#include "wqfl/fl/mlp.hpp"
#include "wqfl/quant.hpp"
#include "wqfl/rng.hpp"

namespace wqfl::fl {

enum class Optimizer { sgd, adam };
enum class LrSchedule { constant, diminishing };

struct TrainerConfig {
  int tau = 2;          // local steps per round
  int batch_size = 50;
  Optimizer optimizer = Optimizer::adam;
  LrSchedule schedule = LrSchedule::constant;
  double learning_rate = 0.01;  // constant schedule
  double mu = 1.0;              // diminishing schedule: 2 / (mu (gamma + t))
  double gamma = 3.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  /// Step size of global step t = round * tau + local step.
  double rate(long t) const;
};

/// Adam moments of one user, kept across rounds.
struct OptimizerState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long steps = 0;
};

struct LocalResult {
  Eigen::VectorXd delta_w;  // local model minus the received global model
  double delta = 0.0;       // sqrt(d)/2 (max|delta_w| - min|delta_w|)
  double last_loss = 0.0;   // mini-batch loss of the final step
};

/// Runs tau optimizer steps from w on mini-batches drawn from the shard
/// (without replacement inside a batch, independently across steps).
/// Throws std::runtime_error on a non-finite loss or gradient.
LocalResult local_update(const Mlp& model, const Eigen::VectorXd& w, const Dataset& shard,
                         const TrainerConfig& cfg, OptimizerState& state, int round, Rng& rng);

/// w + sum_n p_n dequantize(update_n).
Eigen::VectorXd aggregate(const Eigen::VectorXd& w, std::span<const quant::QuantizedUpdate> updates,
                          std::span<const double> p);

/// w + sum_n p_n delta_n, the unquantized reference.
Eigen::VectorXd aggregate_exact(const Eigen::VectorXd& w, std::span<const Eigen::VectorXd> deltas,
                                std::span<const double> p);

/// Per-round error tolerance: eps0 * ratio^round.
class EpsilonSchedule {
 public:
  static EpsilonSchedule constant(double eps);
  /// Geometric decay reaching eps_final at round rounds-1.
  static EpsilonSchedule geometric_to(double eps0, double eps_final, int rounds);
  /// Geometric decay with a given ratio in (0, 1].
  static EpsilonSchedule geometric(double eps0, double ratio);

  double operator()(int round) const;
  double initial() const { return eps0_; }
  double ratio() const { return ratio_; }
  bool is_constant() const { return ratio_ == 1.0; }
  std::string describe() const;

 private:
  EpsilonSchedule(double eps0, double ratio);

  double eps0_;
  double ratio_;
};

}  // namespace wqfl::fl
