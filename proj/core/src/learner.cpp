// SPDX-License-Identifier: Apache-2.0
#include "hfl/learner.hpp"

#include <cmath>
#include <numeric>

#include "hfl/error.hpp"
#include "hfl/random.hpp"

namespace hfl {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_size(const ModelParams& p, Index expected, const std::string& who) {
  if (p.weights.size() != expected) {
    throw ContractViolation(who + ": expected " + std::to_string(expected) + " parameters, got " +
                            std::to_string(p.weights.size()));
  }
}

// Row-wise softmax cross-entropy. Returns mean loss; turns `logits` into
// dLoss/dlogits in place.
double softmax_xent(MatrixXd& logits, const VectorXd& labels) {
  const Index n = logits.rows();
  const VectorXd peak = logits.rowwise().maxCoeff();
  logits.colwise() -= peak;
  logits = logits.array().exp().matrix();
  const VectorXd z = logits.rowwise().sum();
  logits.array().colwise() /= z.array();
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto y = static_cast<Index>(labels(i));
    loss -= std::log(std::max(logits(i, y), 1e-300));
    logits(i, y) -= 1.0;
  }
  logits /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

Eigen::VectorXi argmax_rows(const MatrixXd& scores) {
  Eigen::VectorXi out(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    out(i) = static_cast<int>(best);
  }
  return out;
}

void fill_normal(Eigen::Ref<VectorXd> v, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
}

}  // namespace

MlpClassifier::MlpClassifier(Index inputs, Index hidden, Index classes) : d_(inputs), h_(hidden), k_(classes) {
  if (inputs < 1 || hidden < 1 || classes < 2) throw ConfigError("mlp: invalid layer sizes");
}

Index MlpClassifier::parameter_count() const { return h_ * d_ + h_ + k_ * h_ + k_; }

ModelParams MlpClassifier::initial_params(std::uint64_t seed) const {
  Rng rng = make_rng(seed, Stream::kModelInit);
  ModelParams p;
  p.weights = VectorXd::Zero(parameter_count());
  p.shape = {h_ * d_, h_, k_ * h_, k_};
  fill_normal(p.weights.segment(0, h_ * d_), std::sqrt(2.0 / static_cast<double>(d_)), rng);
  fill_normal(p.weights.segment(h_ * d_ + h_, k_ * h_), 1.0 / std::sqrt(static_cast<double>(h_)), rng);
  return p;
}

double MlpClassifier::loss_and_gradient(const ModelParams& params, const Dataset& data, VectorXd* grad) const {
  check_size(params, parameter_count(), "mlp");
  const double* w = params.weights.data();
  Eigen::Map<const MatrixXd> w1(w, h_, d_);
  Eigen::Map<const VectorXd> b1(w + h_ * d_, h_);
  Eigen::Map<const MatrixXd> w2(w + h_ * d_ + h_, k_, h_);
  Eigen::Map<const VectorXd> b2(w + h_ * d_ + h_ + k_ * h_, k_);

  MatrixXd a1 = ((data.x * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
  MatrixXd logits = (a1 * w2.transpose()).rowwise() + b2.transpose();
  const double loss = softmax_xent(logits, data.y);
  if (grad) {
    grad->resize(parameter_count());
    double* g = grad->data();
    Eigen::Map<MatrixXd> g1(g, h_, d_);
    Eigen::Map<VectorXd> gb1(g + h_ * d_, h_);
    Eigen::Map<MatrixXd> g2(g + h_ * d_ + h_, k_, h_);
    Eigen::Map<VectorXd> gb2(g + h_ * d_ + h_ + k_ * h_, k_);
    g2.noalias() = logits.transpose() * a1;
    gb2 = logits.colwise().sum().transpose();
    MatrixXd da1 = (logits * w2).array() * (a1.array() > 0.0).cast<double>();
    g1.noalias() = da1.transpose() * data.x;
    gb1 = da1.colwise().sum().transpose();
  }
  return loss;
}

Eigen::VectorXi MlpClassifier::predict(const ModelParams& params, const MatrixXd& x) const {
  check_size(params, parameter_count(), "mlp");
  const double* w = params.weights.data();
  Eigen::Map<const MatrixXd> w1(w, h_, d_);
  Eigen::Map<const VectorXd> b1(w + h_ * d_, h_);
  Eigen::Map<const MatrixXd> w2(w + h_ * d_ + h_, k_, h_);
  Eigen::Map<const VectorXd> b2(w + h_ * d_ + h_ + k_ * h_, k_);
  MatrixXd a1 = ((x * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
  return argmax_rows((a1 * w2.transpose()).rowwise() + b2.transpose());
}

SoftmaxClassifier::SoftmaxClassifier(std::vector<Index> features, Index classes)
    : features_(std::move(features)), k_(classes) {
  if (features_.empty() || classes < 2) throw ConfigError("softmax: invalid sizes");
}

SoftmaxClassifier::SoftmaxClassifier(Index n_features, Index classes)
    : SoftmaxClassifier(
          [n_features] {
            std::vector<Index> f(static_cast<std::size_t>(std::max<Index>(n_features, 0)));
            std::iota(f.begin(), f.end(), Index{0});
            return f;
          }(),
          classes) {}

Index SoftmaxClassifier::parameter_count() const {
  return k_ * static_cast<Index>(features_.size()) + k_;
}

ModelParams SoftmaxClassifier::initial_params(std::uint64_t seed) const {
  Rng rng = make_rng(seed, Stream::kModelInit);
  const auto s = static_cast<Index>(features_.size());
  ModelParams p;
  p.weights = VectorXd::Zero(parameter_count());
  p.shape = {k_ * s, k_};
  fill_normal(p.weights.segment(0, k_ * s), 1.0 / std::sqrt(static_cast<double>(s)), rng);
  return p;
}

MatrixXd SoftmaxClassifier::select(const MatrixXd& x) const {
  MatrixXd out(x.rows(), static_cast<Index>(features_.size()));
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j] >= x.cols()) throw ContractViolation("softmax: feature index out of range");
    out.col(static_cast<Index>(j)) = x.col(features_[j]);
  }
  return out;
}

double SoftmaxClassifier::loss_and_gradient(const ModelParams& params, const Dataset& data, VectorXd* grad) const {
  check_size(params, parameter_count(), "softmax");
  const auto s = static_cast<Index>(features_.size());
  Eigen::Map<const MatrixXd> w(params.weights.data(), k_, s);
  Eigen::Map<const VectorXd> b(params.weights.data() + k_ * s, k_);
  const MatrixXd xs = select(data.x);
  MatrixXd logits = (xs * w.transpose()).rowwise() + b.transpose();
  const double loss = softmax_xent(logits, data.y);
  if (grad) {
    grad->resize(parameter_count());
    Eigen::Map<MatrixXd> gw(grad->data(), k_, s);
    Eigen::Map<VectorXd> gb(grad->data() + k_ * s, k_);
    gw.noalias() = logits.transpose() * xs;
    gb = logits.colwise().sum().transpose();
  }
  return loss;
}

Eigen::VectorXi SoftmaxClassifier::predict(const ModelParams& params, const MatrixXd& x) const {
  check_size(params, parameter_count(), "softmax");
  const auto s = static_cast<Index>(features_.size());
  Eigen::Map<const MatrixXd> w(params.weights.data(), k_, s);
  Eigen::Map<const VectorXd> b(params.weights.data() + k_ * s, k_);
  return argmax_rows((select(x) * w.transpose()).rowwise() + b.transpose());
}

LinearRegressor::LinearRegressor(Index inputs) : d_(inputs) {
  if (inputs < 1) throw ConfigError("linear: need at least one input");
}

ModelParams LinearRegressor::initial_params(std::uint64_t seed) const {
  Rng rng = make_rng(seed, Stream::kModelInit);
  ModelParams p;
  p.weights = VectorXd::Zero(d_ + 1);
  p.shape = {d_, 1};
  fill_normal(p.weights.segment(0, d_), 1.0 / std::sqrt(static_cast<double>(d_)), rng);
  return p;
}

double LinearRegressor::loss_and_gradient(const ModelParams& params, const Dataset& data, VectorXd* grad) const {
  check_size(params, parameter_count(), "linear");
  const auto w = params.weights.head(d_);
  const double b = params.weights(d_);
  const VectorXd r = (data.x * w).array() + b - data.y.array();
  const double n = static_cast<double>(data.size());
  if (grad) {
    grad->resize(d_ + 1);
    grad->head(d_) = data.x.transpose() * r / n;
    (*grad)(d_) = r.sum() / n;
  }
  return 0.5 * r.squaredNorm() / n;
}

Eigen::VectorXi LinearRegressor::predict(const ModelParams& params, const MatrixXd& x) const {
  check_size(params, parameter_count(), "linear");
  const VectorXd out = (x * params.weights.head(d_)).array() + params.weights(d_);
  return out.array().round().cast<int>();
}

}  // namespace hfl
