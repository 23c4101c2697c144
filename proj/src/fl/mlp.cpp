#include "wqfl/fl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace wqfl::fl {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Column-wise softmax of logits, in place.
void softmax(MatrixXd& z) {
  for (Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

struct Views {
  Views(const Eigen::VectorXd& w, const MlpShape& s)
      : first_in(s.hidden > 0 ? s.hidden : s.output),
        w1(w.data(), first_in, s.input),
        b1(w.data() + first_in * s.input, first_in),
        w2(w.data() + first_in * (s.input + 1), s.hidden > 0 ? s.output : 0, s.hidden),
        b2(w.data() + first_in * (s.input + 1) + s.output * s.hidden, s.hidden > 0 ? s.output : 0) {}

  Index first_in;
  ConstMap w1;
  ConstVecMap b1;
  ConstMap w2;
  ConstVecMap b2;
};

}  // namespace

std::int64_t MlpShape::num_params() const {
  if (input < 1 || output < 2 || hidden < 0) throw std::invalid_argument("invalid MLP shape");
  if (hidden == 0) return std::int64_t{output} * (input + 1);
  return std::int64_t{hidden} * (input + 1) + std::int64_t{output} * (hidden + 1);
}

Mlp::Mlp(MlpShape shape) : shape_(shape) { (void)shape_.num_params(); }

Eigen::VectorXd Mlp::init_params(Rng& rng) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(num_params());
  const Index first = shape_.hidden > 0 ? shape_.hidden : shape_.output;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(shape_.input));
  for (Index i = 0; i < first * shape_.input; ++i) w[i] = s1 * standard_normal(rng);
  if (shape_.hidden > 0) {
    const Index off = first * (shape_.input + 1);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
    for (Index i = 0; i < Index{shape_.output} * shape_.hidden; ++i) w[off + i] = s2 * standard_normal(rng);
  }
  return w;
}

void Mlp::check(const Eigen::VectorXd& w, const MatrixXd& x) const {
  if (w.size() != num_params()) throw std::invalid_argument("parameter vector has the wrong length");
  if (x.rows() != shape_.input) throw std::invalid_argument("input dimension mismatch");
}

MatrixXd Mlp::predict(const Eigen::VectorXd& w, const MatrixXd& x) const {
  check(w, x);
  Views v(w, shape_);
  MatrixXd z = (v.w1 * x).colwise() + v.b1;
  if (shape_.hidden > 0) {
    const MatrixXd h = (1.0 + (-z.array()).exp()).inverse().matrix();
    z = (v.w2 * h).colwise() + v.b2;
  }
  softmax(z);
  return z;
}

double Mlp::loss_and_grad(const Eigen::VectorXd& w, const MatrixXd& x, std::span<const int> labels,
                          Eigen::VectorXd* grad) const {
  check(w, x);
  const Index n = x.cols();
  if (static_cast<Index>(labels.size()) != n || n == 0) {
    throw std::invalid_argument("need one label per sample and at least one sample");
  }
  Views v(w, shape_);
  const bool deep = shape_.hidden > 0;

  MatrixXd z1 = (v.w1 * x).colwise() + v.b1;
  MatrixXd h;
  MatrixXd prob;
  if (deep) {
    h = (1.0 + (-z1.array()).exp()).inverse().matrix();
    prob = (v.w2 * h).colwise() + v.b2;
  } else {
    prob = std::move(z1);
  }
  softmax(prob);

  double loss = 0.0;
  for (Index c = 0; c < n; ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 0 || y >= shape_.output) throw std::invalid_argument("label out of range");
    loss -= std::log(std::max(prob(y, c), 1e-300));
  }
  loss /= static_cast<double>(n);
  if (!grad) return loss;

  // dL/dz_out = (p - onehot) / n
  MatrixXd d_out = prob;
  for (Index c = 0; c < n; ++c) d_out(labels[static_cast<std::size_t>(c)], c) -= 1.0;
  d_out /= static_cast<double>(n);

  grad->resize(num_params());
  const Index first = v.first_in;
  Eigen::Map<MatrixXd> g_w1(grad->data(), first, shape_.input);
  Eigen::Map<Eigen::VectorXd> g_b1(grad->data() + first * shape_.input, first);
  if (!deep) {
    g_w1.noalias() = d_out * x.transpose();
    g_b1 = d_out.rowwise().sum();
    return loss;
  }
  const Index off = first * (shape_.input + 1);
  Eigen::Map<MatrixXd> g_w2(grad->data() + off, shape_.output, shape_.hidden);
  Eigen::Map<Eigen::VectorXd> g_b2(grad->data() + off + Index{shape_.output} * shape_.hidden,
                                   shape_.output);
  g_w2.noalias() = d_out * h.transpose();
  g_b2 = d_out.rowwise().sum();
  const MatrixXd d_hidden = ((v.w2.transpose() * d_out).array() * h.array() * (1.0 - h.array())).matrix();
  g_w1.noalias() = d_hidden * x.transpose();
  g_b1 = d_hidden.rowwise().sum();
  return loss;
}

Evaluation Mlp::evaluate(const Eigen::VectorXd& w, const Dataset& data) const {
  Evaluation e;
  if (data.size() == 0) return e;
  const MatrixXd prob = predict(w, data.inputs);
  std::size_t correct = 0;
  for (Index c = 0; c < prob.cols(); ++c) {
    Index best = 0;
    prob.col(c).maxCoeff(&best);
    const int y = data.labels[static_cast<std::size_t>(c)];
    if (best == y) ++correct;
    e.loss -= std::log(std::max(prob(y, c), 1e-300));
  }
  e.loss /= static_cast<double>(data.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

}  // namespace wqfl::fl
