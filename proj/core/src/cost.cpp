// SPDX-License-Identifier: Apache-2.0
#include "hfl/cost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hfl/csv.hpp"
#include "hfl/error.hpp"

namespace hfl {

void CostParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(noise_psd_w_per_hz > 0.0)) throw ConfigError("noise_psd must be positive");
  if (!(model_bits > 0.0)) throw ConfigError("model size must be positive");
  if (local_iters < 1 || edge_iters < 1) throw ConfigError("L and Q must be at least 1");
  if (!(cloud_bandwidth_hz > 0.0)) throw ConfigError("cloud bandwidth must be positive");
}

void Allocation::merge(const Allocation& other) {
  for (const auto& [id, b] : other.bandwidth) bandwidth[id] = b;
  for (const auto& [id, f] : other.frequency) frequency[id] = f;
}

std::size_t AssignmentPattern::num_devices() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

EdgeId AssignmentPattern::edge_of(DeviceId device) const {
  for (EdgeId m = 0; m < groups.size(); ++m) {
    if (std::find(groups[m].begin(), groups[m].end(), device) != groups[m].end()) return m;
  }
  return groups.size();
}

std::vector<DeviceId> AssignmentPattern::members() const {
  std::vector<DeviceId> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  std::sort(all.begin(), all.end());
  return all;
}

void AssignmentPattern::normalize() {
  for (auto& g : groups) std::sort(g.begin(), g.end());
}

void AssignmentPattern::validate(const std::vector<DeviceId>& scheduled) const {
  auto all = members();
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw ContractViolation("assignment pattern: a device is assigned to more than one edge");
  }
  auto expected = scheduled;
  std::sort(expected.begin(), expected.end());
  if (all != expected) throw ContractViolation("assignment pattern does not cover exactly the scheduled set");
}

double compute_time(const Device& device, double freq_hz, int local_iters) {
  if (!(freq_hz > 0.0)) throw DomainError("compute_time: frequency must be positive");
  return local_iters * device.cycles_per_sample * static_cast<double>(device.num_samples) / freq_hz;
}

double compute_energy(const Device& device, double freq_hz, int local_iters, double alpha) {
  return alpha / 2.0 * local_iters * freq_hz * freq_hz * device.cycles_per_sample *
         static_cast<double>(device.num_samples);
}

double tx_rate(double bandwidth_hz, double gain, double power_w, double noise_psd) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("tx_rate: bandwidth must be positive");
  return bandwidth_hz * std::log2(1.0 + gain * power_w / (noise_psd * bandwidth_hz));
}

TimeEnergy comm_time_energy(const Device& device, double gain, double bandwidth_hz, const CostParams& params) {
  const double rate = tx_rate(bandwidth_hz, gain, device.tx_power_w, params.noise_psd_w_per_hz);
  if (!(rate > 0.0)) {
    throw InfeasibleError("device " + std::to_string(device.id) + " has a zero-rate uplink");
  }
  const double t = params.model_bits / rate;
  return {t, device.tx_power_w * t};
}

TimeEnergy edge_round_cost(const Topology& topo, EdgeId edge, const std::vector<DeviceId>& members,
                           const Allocation& alloc, const CostParams& params) {
  double slowest = 0.0;
  double energy = 0.0;
  for (DeviceId id : members) {
    auto b = alloc.bandwidth.find(id);
    auto f = alloc.frequency.find(id);
    if (b == alloc.bandwidth.end() || f == alloc.frequency.end()) {
      throw ContractViolation("edge_round_cost: no allocation for device " + std::to_string(id));
    }
    const Device& dev = topo.devices.at(id);
    const TimeEnergy com = comm_time_energy(dev, topo.channel.gain(id, edge), b->second, params);
    const double t = compute_time(dev, f->second, params.local_iters) + com.time;
    slowest = std::max(slowest, t);
    energy += compute_energy(dev, f->second, params.local_iters, params.alpha) + com.energy;
  }
  return {params.edge_iters * slowest, params.edge_iters * energy};
}

TimeEnergy cloud_cost(const EdgeServer& edge, double cloud_gain, const CostParams& params) {
  const double rate = tx_rate(params.cloud_bandwidth_hz, cloud_gain, edge.tx_power_w, params.noise_psd_w_per_hz);
  if (!(rate > 0.0)) throw InfeasibleError("edge " + std::to_string(edge.id) + " has a zero-rate cloud link");
  const double t = params.model_bits / rate;
  return {t, edge.tx_power_w * t};
}

CostReport round_report(const AssignmentPattern& pattern, const Allocation& alloc, const Topology& topo,
                        const CostParams& params) {
  if (pattern.num_edges() != topo.num_edges()) {
    throw ContractViolation("round_report: pattern edge count does not match topology");
  }
  pattern.validate(pattern.members());

  CostReport report;
  report.per_edge_time.assign(pattern.num_edges(), 0.0);
  report.per_edge_energy.assign(pattern.num_edges(), 0.0);
  for (EdgeId m = 0; m < pattern.num_edges(); ++m) {
    if (pattern.groups[m].empty()) continue;
    const TimeEnergy edge = edge_round_cost(topo, m, pattern.groups[m], alloc, params);
    const TimeEnergy cloud = cloud_cost(topo.edges[m], topo.channel.cloud_gain(m), params);
    report.per_edge_time[m] = cloud.time + edge.time;
    report.per_edge_energy[m] = cloud.energy + edge.energy;
  }
  report.round_time = report.per_edge_time.empty()
                          ? 0.0
                          : *std::max_element(report.per_edge_time.begin(), report.per_edge_time.end());
  report.round_energy = std::accumulate(report.per_edge_energy.begin(), report.per_edge_energy.end(), 0.0);
  report.objective = report.round_energy + params.lambda * report.round_time;
  return report;
}

ClusteringCost clustering_phase_cost(const Topology& topo, const CostParams& params, double model_bits,
                                     double compute_scale) {
  CostParams p = params;
  p.model_bits = model_bits;

  std::vector<std::vector<DeviceId>> groups(topo.num_edges());
  for (const auto& d : topo.devices) groups[nearest_edge(topo, d.id)].push_back(d.id);

  ClusteringCost out;
  for (EdgeId m = 0; m < groups.size(); ++m) {
    if (groups[m].empty()) continue;
    const double share = topo.edges[m].bandwidth_hz / static_cast<double>(groups[m].size());
    double slowest = 0.0;
    for (DeviceId id : groups[m]) {
      const Device& dev = topo.devices[id];
      const double t_cmp = compute_scale * compute_time(dev, dev.max_freq_hz, p.local_iters);
      const double e_cmp = compute_scale * compute_energy(dev, dev.max_freq_hz, p.local_iters, p.alpha);
      const TimeEnergy com = comm_time_energy(dev, topo.channel.gain(id, m), share, p);
      slowest = std::max(slowest, t_cmp + com.time);
      out.energy += e_cmp + com.energy;
    }
    // The edge relays every member model to the cloud.
    const TimeEnergy relay = cloud_cost(topo.edges[m], topo.channel.cloud_gain(m), p);
    const double n = static_cast<double>(groups[m].size());
    out.time = std::max(out.time, slowest + n * relay.time);
    out.energy += n * relay.energy;
  }
  out.uplink_bytes = 2.0 * static_cast<double>(topo.num_devices()) * model_bits / 8.0;
  return out;
}

std::string cost_csv_header(std::size_t n_edges) {
  std::vector<std::string> cells{"round", "T_i", "E_i", "objective"};
  for (std::size_t m = 0; m < n_edges; ++m) cells.push_back("T_edge" + std::to_string(m));
  for (std::size_t m = 0; m < n_edges; ++m) cells.push_back("E_edge" + std::to_string(m));
  return csv_line(cells);
}

std::string cost_csv_row(std::size_t round, const CostReport& report) {
  std::vector<std::string> cells{format_number(round), format_number(report.round_time),
                                 format_number(report.round_energy), format_number(report.objective)};
  for (double t : report.per_edge_time) cells.push_back(format_number(t));
  for (double e : report.per_edge_energy) cells.push_back(format_number(e));
  return csv_line(cells);
}

}  // namespace hfl
