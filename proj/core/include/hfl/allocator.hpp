// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hfl/cost.hpp"
#include "hfl/topology.hpp"

namespace hfl {

struct AllocMember {
  Device device;
  double gain = 0.0;  // device -> edge channel gain
};

/// One edge's bandwidth/CPU allocation problem: minimize E_m + lambda*T_m
/// subject to sum(b) <= B_m and f_min <= f <= f_max.
struct AllocRequest {
  EdgeServer edge;
  double cloud_gain = 0.0;
  std::vector<AllocMember> members;
  CostParams params;
  double tolerance = 1e-4;       // relative, on the objective
  double min_freq_hz = 1e6;      // keeps compute time finite
  std::size_t max_iterations = 10000;
  bool record_trace = false;
};

struct AllocResult {
  Allocation allocation;
  double objective = 0.0;  // E_m + lambda * T_m, including the cloud upload
  TimeEnergy cost;         // T_m, E_m
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::pair<double, double>> trace;  // (deadline, objective) per outer evaluation
};

AllocRequest make_request(const Topology& topo, EdgeId edge, const std::vector<DeviceId>& members,
                          const CostParams& params, double tolerance = 1e-4);

/// Throws InfeasibleError when some member has no usable uplink.
AllocResult solve_edge(const AllocRequest& req);

struct SystemAllocation {
  Allocation allocation;
  CostReport report;
  std::vector<AllocResult> per_edge;  // empty edges hold a default result
};

SystemAllocation allocate_all(const AssignmentPattern& pattern, const Topology& topo, const CostParams& params,
                              double tolerance = 1e-4);

}  // namespace hfl
