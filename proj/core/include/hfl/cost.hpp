// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hfl/topology.hpp"

namespace hfl {

constexpr double kBitsPerKilobyte = 1024.0 * 8.0;

/// Physical and training constants of the latency/energy model.
struct CostParams {
  double alpha = 2e-28;          // alpha/2 is the effective capacitance coefficient
  double lambda = 1.0;           // J per second trade-off weight
  double noise_psd_w_per_hz = dbm_to_watts(-174.0);  // N0, thermal noise density
  double model_bits = 448.0 * kBitsPerKilobyte;
  int local_iters = 5;           // L
  int edge_iters = 5;            // Q
  double cloud_bandwidth_hz = 10e6;

  void validate() const;
};

/// Per-device bandwidth (Hz) and CPU frequency (Hz).
struct Allocation {
  std::map<DeviceId, double> bandwidth;
  std::map<DeviceId, double> frequency;

  void merge(const Allocation& other);
};

/// Partition of the scheduled devices across edge servers; groups[m] is the
/// sorted member list of edge m.
struct AssignmentPattern {
  std::vector<std::vector<DeviceId>> groups;

  AssignmentPattern() = default;
  explicit AssignmentPattern(std::size_t n_edges) : groups(n_edges) {}

  std::size_t num_edges() const { return groups.size(); }
  std::size_t num_devices() const;
  /// Edge holding `device`, or num_edges() when absent.
  EdgeId edge_of(DeviceId device) const;
  std::vector<DeviceId> members() const;
  void normalize();  // sorts every group
  /// Throws ContractViolation unless groups are disjoint and cover exactly `scheduled`.
  void validate(const std::vector<DeviceId>& scheduled) const;

  bool operator==(const AssignmentPattern&) const = default;
};

struct TimeEnergy {
  double time = 0.0;    // seconds
  double energy = 0.0;  // joules
};

struct CostReport {
  std::vector<double> per_edge_time;
  std::vector<double> per_edge_energy;
  double round_time = 0.0;
  double round_energy = 0.0;
  double objective = 0.0;
};

double compute_time(const Device& device, double freq_hz, int local_iters);
double compute_energy(const Device& device, double freq_hz, int local_iters, double alpha);
double tx_rate(double bandwidth_hz, double gain, double power_w, double noise_psd);
TimeEnergy comm_time_energy(const Device& device, double gain, double bandwidth_hz, const CostParams& params);
TimeEnergy edge_round_cost(const Topology& topo, EdgeId edge, const std::vector<DeviceId>& members,
                           const Allocation& alloc, const CostParams& params);
TimeEnergy cloud_cost(const EdgeServer& edge, double cloud_gain, const CostParams& params);
CostReport round_report(const AssignmentPattern& pattern, const Allocation& alloc, const Topology& topo,
                        const CostParams& params);

/// Cost of one device-clustering pass: every device trains an auxiliary model
/// of `model_bits` for L iterations at f_max, uploads it to its nearest edge
/// over an equal bandwidth share, and each edge forwards its members' models
/// to the cloud. Compute cycles are scaled by `compute_scale`.
struct ClusteringCost {
  double time = 0.0;
  double energy = 0.0;
  double uplink_bytes = 0.0;
};
ClusteringCost clustering_phase_cost(const Topology& topo, const CostParams& params, double model_bits,
                                     double compute_scale);

std::string cost_csv_header(std::size_t n_edges);
std::string cost_csv_row(std::size_t round, const CostReport& report);

}  // namespace hfl
