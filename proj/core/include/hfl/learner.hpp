// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hfl {

/// Row-major samples with one label per row (class index stored as a double
/// for classifiers, the target value for regressors).
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Eigen::Index size() const { return x.rows(); }
};

struct ModelParams {
  Eigen::VectorXd weights;
  std::vector<Eigen::Index> shape;  // sizes of the parameter blocks, in layout order

  bool operator==(const ModelParams&) const = default;
};

class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index parameter_count() const = 0;
  virtual ModelParams initial_params(std::uint64_t seed) const = 0;
  /// Mean loss over the dataset; writes the gradient when `grad` is non-null.
  virtual double loss_and_gradient(const ModelParams& params, const Dataset& data, Eigen::VectorXd* grad) const = 0;
  /// Predicted class per row (regressors return rounded outputs).
  virtual Eigen::VectorXi predict(const ModelParams& params, const Eigen::MatrixXd& x) const = 0;

  /// Storage size at 32-bit floats, the convention used for model sizes.
  double size_bytes() const { return 4.0 * static_cast<double>(parameter_count()); }
};

/// One ReLU hidden layer followed by softmax cross-entropy.
class MlpClassifier final : public Learner {
 public:
  MlpClassifier(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes);

  std::string name() const override { return "mlp"; }
  Eigen::Index parameter_count() const override;
  ModelParams initial_params(std::uint64_t seed) const override;
  double loss_and_gradient(const ModelParams& params, const Dataset& data, Eigen::VectorXd* grad) const override;
  Eigen::VectorXi predict(const ModelParams& params, const Eigen::MatrixXd& x) const override;

 private:
  Eigen::Index d_;
  Eigen::Index h_;
  Eigen::Index k_;
};

/// Multinomial logistic regression on a fixed subset of input columns. Used
/// as the small clustering model.
class SoftmaxClassifier final : public Learner {
 public:
  SoftmaxClassifier(std::vector<Eigen::Index> features, Eigen::Index classes);
  /// Uses the first `n_features` columns.
  SoftmaxClassifier(Eigen::Index n_features, Eigen::Index classes);

  std::string name() const override { return "softmax"; }
  Eigen::Index parameter_count() const override;
  ModelParams initial_params(std::uint64_t seed) const override;
  double loss_and_gradient(const ModelParams& params, const Dataset& data, Eigen::VectorXd* grad) const override;
  Eigen::VectorXi predict(const ModelParams& params, const Eigen::MatrixXd& x) const override;

 private:
  Eigen::MatrixXd select(const Eigen::MatrixXd& x) const;

  std::vector<Eigen::Index> features_;
  Eigen::Index k_;
};

/// Least squares, loss = mean((x.w + b - y)^2) / 2.
class LinearRegressor final : public Learner {
 public:
  explicit LinearRegressor(Eigen::Index inputs);

  std::string name() const override { return "linear"; }
  Eigen::Index parameter_count() const override { return d_ + 1; }
  ModelParams initial_params(std::uint64_t seed) const override;
  double loss_and_gradient(const ModelParams& params, const Dataset& data, Eigen::VectorXd* grad) const override;
  Eigen::VectorXi predict(const ModelParams& params, const Eigen::MatrixXd& x) const override;

 private:
  Eigen::Index d_;
};

}  // namespace hfl
