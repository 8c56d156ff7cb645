// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hfl/assigner.hpp"
#include "hfl/cost.hpp"
#include "hfl/d3qn.hpp"
#include "hfl/fl.hpp"
#include "hfl/scheduler.hpp"
#include "hfl/topology.hpp"

namespace hfl {

/// Everything one training run depends on. Every random stream derives from
/// `seed`, so policies compared under one seed share topology, data,
/// partition and initial weights.
struct ExperimentConfig {
  // deployment
  std::size_t devices = 40;
  std::size_t edges = 3;
  double side_m = 1000.0;
  TopologyRanges ranges;
  CostParams cost;
  double alloc_tolerance = 1e-4;

  // scheduling
  SchedulePolicy policy = SchedulePolicy::kIkc;
  std::size_t scheduled = 12;   // H
  std::size_t per_cluster = 2;  // h
  std::size_t clusters = 6;     // K

  // assignment
  AssignmentStrategy assignment;
  std::string agent_path;  // checkpoint for the drl strategy

  // data and learner
  MixtureSpec mixture{6, 16, 3.0, 1.0, 0};  // seed is overridden by `seed`
  double majority_fraction = 0.8;
  std::size_t test_size = 2000;
  std::string idx_train_images;  // when set, IDX files replace the mixture
  std::string idx_train_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
  std::size_t hidden = 16;
  double beta = 0.05;
  std::size_t mini_features = 8;
  double mini_model_bits = 10.0 * kBitsPerKilobyte;

  // stopping
  double target_accuracy = 0.8;
  std::size_t max_rounds = 100;

  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);
/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Deployment, partitioned data and learners shared by runs and cluster evaluation.
struct Workload {
  Topology topology;
  DataPartition partition;
  Dataset test;
  std::unique_ptr<Learner> learner;
  std::unique_ptr<Learner> mini;
};
Workload build_workload(const ExperimentConfig& config);

struct RoundRow {
  std::size_t round = 0;
  double accuracy = 0.0;
  double time = 0.0;
  double energy = 0.0;
  double objective = 0.0;
  double uplink_bytes = 0.0;
  double assign_wall_s = 0.0;
  std::size_t scheduled = 0;
};

struct RunRecord {
  std::vector<RoundRow> rows;
  bool converged = false;
  std::size_t rounds = 0;
  double total_time = 0.0;
  double total_energy = 0.0;
  double total_objective = 0.0;  // E + lambda*T over the training rounds
  double total_bytes = 0.0;
  double ari = std::numeric_limits<double>::quiet_NaN();  // clustering vs majority labels
  ClusteringCost clustering;  // one-off clustering pass, reported apart from the totals
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Schedule, assign, allocate, train and evaluate until the target accuracy
/// or `max_rounds`. `agent` overrides `agent_path` for the drl strategy.
RunRecord run_experiment(const ExperimentConfig& config, const Agent* agent = nullptr);

/// Per-round uplink volume: Q*H device uploads plus one edge upload per
/// nonempty edge, z/8 bytes each.
double uplink_bytes(const AssignmentPattern& pattern, const CostParams& params);

std::string rounds_csv_header();
std::string rounds_csv_row(const RoundRow& row, const std::string& policy);
/// rounds.csv plus manifest.json (config, hash, seed, totals, version).
void write_run(const std::string& dir, const ExperimentConfig& config, const RunRecord& record);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // population form, 0 for a single run
};
Stat summarize(const std::vector<double>& values);

struct SweepRow {
  std::string label;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t converged = 0;
  Stat rounds, time, energy, objective, bytes;
  std::vector<RunRecord> records;
  std::vector<std::string> errors;
};

/// Runs each labelled config `repetitions` times with seed_r = seed + r.
/// A failing run is recorded and the sweep moves on.
std::vector<SweepRow> sweep(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                            std::size_t repetitions, const Agent* agent = nullptr,
                            const std::function<void(const std::string&, std::size_t, const RunRecord*)>& on_run = {});
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

struct CompareRow {
  std::string strategy;
  std::size_t instances = 0;
  double mean_time = 0.0;
  double mean_energy = 0.0;
  double mean_objective = 0.0;
  double mean_wall_s = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> summary;
  std::vector<std::vector<AssignmentOutcome>> outcomes;  // [strategy][instance]
};

/// Strategy names: geographic, hfel-100, hfel-300 (alias hfel), exhaustive, drl.
/// Instances draw H fresh devices against the edges of `base`.
CompareResult compare_assignment(const Topology& base, std::size_t horizon, std::size_t instances,
                                 const std::vector<std::string>& strategies, const CostParams& params,
                                 std::uint64_t seed, const Agent* agent = nullptr, double tolerance = 1e-4);
std::string compare_csv_header();
std::string compare_csv_row(const CompareRow& row);

struct ClusterEval {
  double ari_ikc = 0.0;  // mini model
  double ari_vkc = 0.0;  // full model
  ClusteringCost cost_ikc;
  ClusteringCost cost_vkc;
  ClusterSet clusters_ikc;
  ClusterSet clusters_vkc;
};
ClusterEval cluster_eval(const ExperimentConfig& config);

}  // namespace hfl
