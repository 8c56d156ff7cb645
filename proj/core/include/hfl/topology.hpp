// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hfl/random.hpp"

namespace hfl {

using DeviceId = std::size_t;
using EdgeId = std::size_t;

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;
};

double distance_m(const Position& a, const Position& b);

/// An IoT device. Units: cycles/sample, samples, watts, hertz.
struct Device {
  DeviceId id = 0;
  Position position;
  double cycles_per_sample = 0.0;
  std::size_t num_samples = 0;
  double tx_power_w = 0.0;
  double max_freq_hz = 0.0;
  std::size_t dataset_id = 0;
};

struct EdgeServer {
  EdgeId id = 0;
  Position position;
  double bandwidth_hz = 0.0;
  double tx_power_w = 0.0;
};

/// Mean channel power gains, frozen for the lifetime of a run. Shadowing draws
/// are stored next to the gains they produced.
struct ChannelTable {
  std::vector<std::vector<double>> device_edge_gain;       // [device][edge]
  std::vector<std::vector<double>> device_edge_shadow_db;  // [device][edge]
  std::vector<double> edge_cloud_gain;                     // [edge]
  std::vector<double> edge_cloud_shadow_db;                // [edge]

  double gain(DeviceId device, EdgeId edge) const { return device_edge_gain.at(device).at(edge); }
  double cloud_gain(EdgeId edge) const { return edge_cloud_gain.at(edge); }
};

struct Topology {
  std::vector<Device> devices;
  std::vector<EdgeServer> edges;
  Position cloud_position;
  ChannelTable channel;
  double side_length_m = 0.0;

  std::size_t num_devices() const { return devices.size(); }
  std::size_t num_edges() const { return edges.size(); }
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// Sampling bounds for generated deployments. Defaults follow the usual
/// parameter table for this setup (FashionMNIST dataset sizes).
struct TopologyRanges {
  Range cycles_per_sample{1e4, 1e5};
  Range num_samples{400, 700};
  Range device_power_dbm{0.0, 23.0};
  Range edge_bandwidth_hz{0.5e6, 3e6};
  double edge_power_dbm = 23.0;
  double max_freq_hz = 2e9;
  double shadowing_std_db = 8.0;
  /// Links shorter than this are evaluated at this distance.
  double min_link_distance_m = 1.0;

  void validate() const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Linear power gain of the 128.1 + 37.6 log10(d[km]) path-loss law with a
/// log-normal shadowing offset in dB.
double path_loss_gain(double distance_km, double shadow_db);

Topology generate_topology(std::size_t n_devices, std::size_t n_edges, double side_m, std::uint64_t seed,
                           const TopologyRanges& ranges = {});

/// Draws a fresh device population against the fixed edge layout of `base`
/// (positions, parameters and shadowing all re-sampled). Used to build
/// training episodes for the assignment policy.
Topology resample_devices(const Topology& base, std::size_t n_devices, Rng& rng, const TopologyRanges& ranges = {});

/// Edge with minimum Euclidean distance to the device; ties go to the lower edge id.
EdgeId nearest_edge(const Topology& topo, DeviceId device);

void to_json(nlohmann::json& j, const Topology& topo);
void from_json(const nlohmann::json& j, Topology& topo);

}  // namespace hfl
