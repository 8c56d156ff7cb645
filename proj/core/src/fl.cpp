// SPDX-License-Identifier: Apache-2.0
#include "hfl/fl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hfl/csv.hpp"
#include "hfl/error.hpp"
#include "hfl/random.hpp"

namespace hfl {

using Eigen::Index;
using Eigen::VectorXd;

ModelParams local_train(const Learner& learner, const ModelParams& params, const Dataset& data, int local_iters,
                        double beta) {
  if (local_iters < 1) throw ContractViolation("local_train: L must be >= 1");
  if (data.size() == 0) throw ContractViolation("local_train: empty dataset");
  ModelParams out = params;
  VectorXd grad;
  for (int step = 0; step < local_iters; ++step) {
    const double loss = learner.loss_and_gradient(out, data, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "local_train: non-finite " << (std::isfinite(loss) ? "gradient" : "loss") << " at step " << step
          << " (loss " << loss << ", |w| " << out.weights.norm() << ", beta " << beta << ")";
      throw NumericalError(msg.str());
    }
    out.weights -= beta * grad;
  }
  return out;
}

ModelParams weighted_average(const std::vector<std::pair<const ModelParams*, double>>& inputs) {
  if (inputs.empty()) throw ContractViolation("aggregate: no inputs");
  const ModelParams& first = *inputs.front().first;
  double total = 0.0;
  for (const auto& [p, w] : inputs) {
    if (p->weights.size() != first.weights.size() || p->shape != first.shape) {
      throw ContractViolation("aggregate: parameter shape mismatch");
    }
    if (!(w >= 0.0)) throw ContractViolation("aggregate: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw ContractViolation("aggregate: total weight is zero");
  ModelParams out;
  out.shape = first.shape;
  out.weights = VectorXd::Zero(first.weights.size());
  for (const auto& [p, w] : inputs) out.weights += (w / total) * p->weights;
  return out;
}

namespace {

ModelParams aggregate_pairs(const std::vector<std::pair<ModelParams, double>>& items) {
  std::vector<std::pair<const ModelParams*, double>> refs;
  refs.reserve(items.size());
  for (const auto& [p, w] : items) refs.emplace_back(&p, w);
  return weighted_average(refs);
}

}  // namespace

ModelParams edge_aggregate(const std::vector<std::pair<ModelParams, double>>& locals) {
  return aggregate_pairs(locals);
}

ModelParams cloud_aggregate(const std::vector<std::pair<ModelParams, double>>& edges) {
  return aggregate_pairs(edges);
}

ModelParams run_global_iteration(const Learner& learner, const ModelParams& global, const AssignmentPattern& pattern,
                                 const DataPartition& partition, int local_iters, int edge_iters, double beta) {
  if (edge_iters < 1) throw ContractViolation("run_global_iteration: Q must be >= 1");
  std::vector<std::pair<ModelParams, double>> edge_models;
  for (const auto& group : pattern.groups) {
    if (group.empty()) continue;
    ModelParams edge_model = global;
    double edge_data = 0.0;
    for (int q = 0; q < edge_iters; ++q) {
      std::vector<std::pair<ModelParams, double>> locals;
      locals.reserve(group.size());
      edge_data = 0.0;
      for (DeviceId n : group) {
        const Dataset& data = partition.devices.at(n);
        locals.emplace_back(local_train(learner, edge_model, data, local_iters, beta), static_cast<double>(data.size()));
        edge_data += static_cast<double>(data.size());
      }
      edge_model = edge_aggregate(locals);
    }
    edge_models.emplace_back(std::move(edge_model), edge_data);
  }
  if (edge_models.empty()) throw ContractViolation("run_global_iteration: pattern schedules no device");
  return cloud_aggregate(edge_models);
}

MixtureModel::MixtureModel(const MixtureSpec& spec) : spec_(spec) {
  if (spec.classes < 2 || spec.dim < 1) throw ConfigError("mixture: need >= 2 classes and >= 1 dimension");
  if (!(spec.separation > 0.0) || !(spec.noise > 0.0)) throw ConfigError("mixture: separation and noise must be > 0");
  if (spec.dim < spec.classes) throw ConfigError("mixture: dim must be >= classes");
  Rng rng = make_rng(spec.seed, Stream::kData);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Index>(spec.dim);
  Eigen::MatrixXd g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  means_ = spec.separation * q.leftCols(static_cast<Index>(spec.classes)).transpose();
}

Dataset MixtureModel::sample(const std::vector<std::size_t>& per_class, Rng& rng) const {
  if (per_class.size() != spec_.classes) throw ContractViolation("mixture: per-class count size mismatch");
  std::size_t total = 0;
  for (std::size_t n : per_class) total += n;
  Dataset out;
  out.x.resize(static_cast<Index>(total), static_cast<Index>(spec_.dim));
  out.y.resize(static_cast<Index>(total));
  std::normal_distribution<double> noise(0.0, spec_.noise);
  Index row = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i, ++row) {
      for (Index j = 0; j < out.x.cols(); ++j) out.x(row, j) = means_(static_cast<Index>(c), j) + noise(rng);
      out.y(row) = static_cast<double>(c);
    }
  }
  return out;
}

Dataset MixtureModel::sample_balanced(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> per_class(spec_.classes, n / spec_.classes);
  for (std::size_t c = 0; c < n % spec_.classes; ++c) ++per_class[c];
  return sample(per_class, rng);
}

DataPartition partition_non_iid(const Dataset& pool, const std::vector<std::size_t>& sizes, std::size_t classes,
                                double rho, std::uint64_t seed) {
  if (classes < 2) throw ConfigError("partition: need >= 2 classes");
  if (!(rho > 1.0 / static_cast<double>(classes)) || rho > 1.0) {
    throw ConfigError("partition: majority fraction must lie in (1/K, 1]");
  }
  // Shuffled index lists per class, consumed front to back.
  std::vector<std::vector<Index>> by_class(classes);
  for (Index i = 0; i < pool.size(); ++i) {
    const double label = pool.y(i);
    if (label < 0 || label >= static_cast<double>(classes) || label != std::floor(label)) {
      throw ConfigError("partition: pool label out of range");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  Rng rng = make_rng(seed, Stream::kData);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> cursor(classes, 0);

  DataPartition out;
  out.classes = classes;
  out.majority_fraction = rho;
  out.devices.reserve(sizes.size());
  std::uniform_int_distribution<std::size_t> other(0, classes - 2);
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    if (sizes[d] == 0) throw ConfigError("partition: device size must be >= 1");
    const std::size_t major = d % classes;
    const auto n_major = static_cast<std::size_t>(std::llround(rho * static_cast<double>(sizes[d])));
    std::vector<std::size_t> counts(classes, 0);
    counts[major] = n_major;
    for (std::size_t i = n_major; i < sizes[d]; ++i) {
      std::size_t c = other(rng);
      if (c >= major) ++c;
      ++counts[c];
    }
    Dataset data;
    data.x.resize(static_cast<Index>(sizes[d]), pool.x.cols());
    data.y.resize(static_cast<Index>(sizes[d]));
    Index row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (cursor[c] + counts[c] > by_class[c].size()) {
        throw ConfigError("partition: class " + std::to_string(c) + " has too few samples in the pool");
      }
      for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
        const Index src = by_class[c][cursor[c]++];
        data.x.row(row) = pool.x.row(src);
        data.y(row) = pool.y(src);
      }
    }
    out.devices.push_back(std::move(data));
    out.majority.push_back(major);
  }
  return out;
}

DataPartition partition_non_iid(const Dataset& pool, std::size_t n_devices, std::size_t classes, double rho,
                                std::size_t min_size, std::size_t max_size, std::uint64_t seed) {
  if (min_size < 1 || max_size < min_size) throw ConfigError("partition: invalid size range");
  Rng rng = make_rng(seed ^ 0x5eedULL, Stream::kData);
  std::uniform_int_distribution<std::size_t> size(min_size, max_size);
  std::vector<std::size_t> sizes(n_devices);
  for (auto& s : sizes) s = size(rng);
  return partition_non_iid(pool, sizes, classes, rho, seed);
}

double evaluate(const Learner& learner, const ModelParams& params, const Dataset& test) {
  if (test.size() == 0) throw ContractViolation("evaluate: empty test set");
  const Eigen::VectorXi pred = learner.predict(params, test.x);
  Index correct = 0;
  for (Index i = 0; i < test.size(); ++i) correct += (pred(i) == static_cast<int>(test.y(i)));
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::string metrics_csv_header() { return csv_line({"round", "accuracy", "policy", "scheduled"}); }

std::string metrics_csv_row(std::size_t round, double accuracy, const std::string& policy, std::size_t scheduled) {
  return csv_line({format_number(round), format_number(accuracy), policy, format_number(scheduled)});
}

}  // namespace hfl
