// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfl/random.hpp"
#include "hfl/topology.hpp"

namespace hfl {

enum class SchedulePolicy { kRandom, kVkc, kIkc };

std::string to_string(SchedulePolicy policy);
SchedulePolicy parse_schedule_policy(const std::string& name);

struct ClusterSet {
  std::vector<std::vector<DeviceId>> clusters;  // sorted members per cluster
  std::vector<std::size_t> labels;              // labels[device] = cluster index

  std::size_t num_clusters() const { return clusters.size(); }
  static ClusterSet from_labels(const std::vector<std::size_t>& labels, std::size_t k);
};

struct KMeansOptions {
  std::size_t k = 1;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // max centroid shift
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  Eigen::MatrixXd centroids;  // k x dim
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding over the rows of `points`; keeps
/// the restart with the lowest inertia.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

/// Produces a device's trained auxiliary-model weights.
using AuxTrainer = std::function<Eigen::VectorXd(DeviceId)>;

/// Trains the auxiliary model on every device and groups devices by k-means
/// over the flattened weights.
ClusterSet cluster_devices(std::size_t n_devices, const AuxTrainer& trainer, std::size_t k, std::uint64_t seed);

/// Pair-counting adjusted Rand index. Throws ContractViolation when the
/// labelings cover different device counts.
double adjusted_rand_index(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth);
double adjusted_rand_index(const ClusterSet& predicted, const std::vector<std::size_t>& truth);

struct SchedulerConfig {
  SchedulePolicy policy = SchedulePolicy::kIkc;
  std::size_t per_cluster = 1;  // h
  std::size_t total = 0;        // H; must equal K*h for the cluster policies
  std::uint64_t seed = 0;
};

struct Schedule {
  std::size_t round = 0;
  std::vector<DeviceId> members;  // sorted
};

/// Stateful per-experiment scheduler. Cluster policies keep a working copy of
/// the clusters and, for IKC, the record of recently scheduled devices.
class Scheduler {
 public:
  Scheduler(const SchedulerConfig& config, const ClusterSet& clusters, std::size_t n_devices);

  Schedule next(std::size_t round);

  const std::vector<std::vector<DeviceId>>& working() const { return working_; }
  const std::vector<std::vector<DeviceId>>& record() const { return record_; }
  const SchedulerConfig& config() const { return config_; }

 private:
  std::vector<DeviceId> next_random();
  std::vector<DeviceId> next_vkc();
  std::vector<DeviceId> next_ikc();
  void top_up(std::vector<DeviceId>& picked);

  SchedulerConfig config_;
  std::size_t n_devices_;
  std::vector<std::vector<DeviceId>> working_;
  std::vector<std::vector<DeviceId>> record_;
  Rng rng_;
};

std::string schedule_csv_header();
std::string schedule_csv_row(const Schedule& schedule, SchedulePolicy policy);

}  // namespace hfl
