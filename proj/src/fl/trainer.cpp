#include "wqfl/fl/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wqfl::fl {

void TrainerConfig::validate() const {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (schedule == LrSchedule::diminishing && (!(mu > 0.0) || !(gamma > 0.0))) {
    throw std::invalid_argument("diminishing rate needs mu > 0 and gamma > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw std::invalid_argument("invalid Adam hyperparameters");
  }
}

double TrainerConfig::rate(long t) const {
  if (schedule == LrSchedule::constant) return learning_rate;
  return 2.0 / (mu * (gamma + static_cast<double>(t)));
}

LocalResult local_update(const Mlp& model, const Eigen::VectorXd& w, const Dataset& shard,
                         const TrainerConfig& cfg, OptimizerState& state, int round, Rng& rng) {
  cfg.validate();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  if (batch > shard.size()) throw std::invalid_argument("batch larger than the shard");
  if (!w.allFinite()) throw std::invalid_argument("global model has non-finite entries");
  if (cfg.optimizer == Optimizer::adam && state.m.size() != w.size()) {
    state.m = Eigen::VectorXd::Zero(w.size());
    state.v = Eigen::VectorXd::Zero(w.size());
    state.steps = 0;
  }

  LocalResult out;
  Eigen::VectorXd local = w;
  Eigen::VectorXd grad;
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd x(shard.dim(), static_cast<Eigen::Index>(batch));
  std::vector<int> y(batch);

  for (int k = 0; k < cfg.tau; ++k) {
    // Partial Fisher-Yates: the first `batch` entries become the batch.
    for (std::size_t i = 0; i < batch; ++i) {
      std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
      x.col(static_cast<Eigen::Index>(i)) = shard.inputs.col(static_cast<Eigen::Index>(order[i]));
      y[i] = shard.labels[order[i]];
    }
    const double loss = model.loss_and_grad(local, x, y, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite loss or gradient in round " << round << ", local step " << k;
      throw std::runtime_error(msg.str());
    }
    out.last_loss = loss;
    const double eta = cfg.rate(static_cast<long>(round) * cfg.tau + k);
    if (cfg.optimizer == Optimizer::sgd) {
      local -= eta * grad;
    } else {
      ++state.steps;
      state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
      state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));
      local.array() -= eta * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_eps);
    }
  }
  out.delta_w = local - w;
  out.delta = quant::range_scale({out.delta_w.data(), static_cast<std::size_t>(out.delta_w.size())});
  return out;
}

Eigen::VectorXd aggregate(const Eigen::VectorXd& w, std::span<const quant::QuantizedUpdate> updates,
                          std::span<const double> p) {
  if (updates.size() != p.size()) throw std::invalid_argument("one weight per update required");
  Eigen::VectorXd out = w;
  for (std::size_t n = 0; n < updates.size(); ++n) {
    if (updates[n].size() != static_cast<std::size_t>(w.size())) {
      throw std::invalid_argument("update length differs from the model");
    }
    const auto rec = quant::dequantize(updates[n]);
    out += p[n] * Eigen::Map<const Eigen::VectorXd>(rec.data(), w.size());
  }
  return out;
}

Eigen::VectorXd aggregate_exact(const Eigen::VectorXd& w, std::span<const Eigen::VectorXd> deltas,
                                std::span<const double> p) {
  if (deltas.size() != p.size()) throw std::invalid_argument("one weight per update required");
  Eigen::VectorXd out = w;
  for (std::size_t n = 0; n < deltas.size(); ++n) {
    if (deltas[n].size() != w.size()) throw std::invalid_argument("update length differs from the model");
    out += p[n] * deltas[n];
  }
  return out;
}

EpsilonSchedule::EpsilonSchedule(double eps0, double ratio) : eps0_(eps0), ratio_(ratio) {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw std::invalid_argument("eps0 must be positive");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("decay ratio must lie in (0, 1]");
}

EpsilonSchedule EpsilonSchedule::constant(double eps) { return {eps, 1.0}; }

EpsilonSchedule EpsilonSchedule::geometric_to(double eps0, double eps_final, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (!(eps_final > 0.0) || eps_final > eps0) {
    throw std::invalid_argument("final tolerance must lie in (0, eps0]");
  }
  if (rounds == 1 || eps_final == eps0) return {eps0, 1.0};
  return {eps0, std::pow(eps_final / eps0, 1.0 / (rounds - 1))};
}

EpsilonSchedule EpsilonSchedule::geometric(double eps0, double ratio) { return {eps0, ratio}; }

double EpsilonSchedule::operator()(int round) const {
  if (ratio_ == 1.0) return eps0_;
  return eps0_ * std::pow(ratio_, round);
}

std::string EpsilonSchedule::describe() const {
  std::ostringstream s;
  s.precision(17);
  if (is_constant()) {
    s << "constant(" << eps0_ << ")";
  } else {
    s << "geometric(" << eps0_ << ", r=" << ratio_ << ")";
  }
  return s.str();
}

}  // namespace wqfl::fl
