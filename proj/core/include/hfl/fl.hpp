// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hfl/cost.hpp"
#include "hfl/learner.hpp"

namespace hfl {

/// L full-batch gradient steps with rate `beta`. Throws NumericalError when a
/// loss or gradient turns non-finite.
ModelParams local_train(const Learner& learner, const ModelParams& params, const Dataset& data, int local_iters,
                        double beta);

/// Weighted average sum(w_i * p_i) / sum(w_i), reduced in input order.
ModelParams weighted_average(const std::vector<std::pair<const ModelParams*, double>>& inputs);

ModelParams edge_aggregate(const std::vector<std::pair<ModelParams, double>>& locals);
ModelParams cloud_aggregate(const std::vector<std::pair<ModelParams, double>>& edges);

struct DataPartition {
  std::vector<Dataset> devices;
  std::size_t classes = 0;
  double majority_fraction = 0.0;
  std::vector<std::size_t> majority;  // ground-truth majority class per device

  double size(DeviceId device) const { return static_cast<double>(devices.at(device).size()); }
};

/// Q edge iterations (broadcast, L local steps per member, data-weighted edge
/// averaging) followed by data-weighted cloud averaging over the nonempty edges.
ModelParams run_global_iteration(const Learner& learner, const ModelParams& global, const AssignmentPattern& pattern,
                                 const DataPartition& partition, int local_iters, int edge_iters, double beta);

/// Isotropic Gaussian classes. Class means are `separation` times K random
/// orthonormal directions, so every pair of means is separation*sqrt(2)
/// apart whatever the seed. Requires dim >= classes.
struct MixtureSpec {
  std::size_t classes = 10;
  std::size_t dim = 32;
  double separation = 1.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

class MixtureModel {
 public:
  explicit MixtureModel(const MixtureSpec& spec);

  const MixtureSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& means() const { return means_; }

  /// `per_class[c]` samples of every class, grouped by class.
  Dataset sample(const std::vector<std::size_t>& per_class, Rng& rng) const;
  /// Balanced set of `n` samples (class i % K for row i).
  Dataset sample_balanced(std::size_t n, Rng& rng) const;

 private:
  MixtureSpec spec_;
  Eigen::MatrixXd means_;
};

/// Splits `pool` across devices with sizes `sizes`. Device d takes
/// round(rho * size) samples of class d % K and draws the class of each
/// remaining sample uniformly among the other classes. Samples are drawn
/// without replacement; throws ConfigError when a class runs out.
DataPartition partition_non_iid(const Dataset& pool, const std::vector<std::size_t>& sizes, std::size_t classes,
                                double rho, std::uint64_t seed);
/// Same, with sizes drawn uniformly from [min_size, max_size].
DataPartition partition_non_iid(const Dataset& pool, std::size_t n_devices, std::size_t classes, double rho,
                                std::size_t min_size, std::size_t max_size, std::uint64_t seed);

/// Fraction of correct predictions. Throws ContractViolation on an empty set.
double evaluate(const Learner& learner, const ModelParams& params, const Dataset& test);

std::string metrics_csv_header();
std::string metrics_csv_row(std::size_t round, double accuracy, const std::string& policy, std::size_t scheduled);

}  // namespace hfl
