#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "wqfl/fl/dataset.hpp"
#include "wqfl/rng.hpp"

namespace wqfl::fl {

/// Fully connected classifier with one sigmoid hidden layer and a softmax
/// output. hidden = 0 gives plain softmax regression.
struct MlpShape {
  int input = 784;
  int hidden = 30;
  int output = 10;

  /// Weights plus biases; 23860 for the default shape.
  std::int64_t num_params() const;
};

struct Evaluation {
  double loss = 0.0;  // mean cross-entropy
  double accuracy = 0.0;
};

/// Stateless model; parameters live in a flat vector laid out as
/// W1 (hidden x input, column-major), b1, W2 (output x hidden), b2.
class Mlp {
 public:
  explicit Mlp(MlpShape shape = {});

  const MlpShape& shape() const { return shape_; }
  std::int64_t num_params() const { return shape_.num_params(); }

  /// Normal weights scaled by 1/sqrt(fan_in), zero biases.
  Eigen::VectorXd init_params(Rng& rng) const;

  /// Class probabilities, one column per sample.
  Eigen::MatrixXd predict(const Eigen::VectorXd& w, const Eigen::MatrixXd& x) const;

  /// Mean cross-entropy over the columns of x. Writes the gradient when
  /// `grad` is not null.
  double loss_and_grad(const Eigen::VectorXd& w, const Eigen::MatrixXd& x,
                       std::span<const int> labels, Eigen::VectorXd* grad) const;

  Evaluation evaluate(const Eigen::VectorXd& w, const Dataset& data) const;

 private:
  void check(const Eigen::VectorXd& w, const Eigen::MatrixXd& x) const;

  MlpShape shape_;
};

}  // namespace wqfl::fl
