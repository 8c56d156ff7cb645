// SPDX-License-Identifier: Apache-2.0
#include "hfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "hfl/error.hpp"

namespace hfl {

double distance_m(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double path_loss_gain(double distance_km, double shadow_db) {
  if (!(distance_km > 0.0)) {
    throw DomainError("path_loss_gain: distance must be positive, got " + std::to_string(distance_km));
  }
  const double loss_db = 128.1 + 37.6 * std::log10(distance_km) + shadow_db;
  return std::pow(10.0, -loss_db / 10.0);
}

namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.min <= r.max)) {
    throw ConfigError(std::string("invalid range for ") + name + ": min > max");
  }
}

double link_gain(const Position& a, const Position& b, double shadow_db, double min_distance_m) {
  const double d = std::max(distance_m(a, b), min_distance_m);
  return path_loss_gain(d / 1000.0, shadow_db);
}

Device sample_device(DeviceId id, double side_m, Rng& rng, const TopologyRanges& r) {
  std::uniform_real_distribution<double> coord(0.0, side_m);
  std::uniform_real_distribution<double> cycles(r.cycles_per_sample.min, r.cycles_per_sample.max);
  std::uniform_int_distribution<std::size_t> samples(static_cast<std::size_t>(r.num_samples.min),
                                                     static_cast<std::size_t>(r.num_samples.max));
  std::uniform_real_distribution<double> power_dbm(r.device_power_dbm.min, r.device_power_dbm.max);
  Device d;
  d.id = id;
  d.position.x = coord(rng);
  d.position.y = coord(rng);
  d.cycles_per_sample = cycles(rng);
  d.num_samples = samples(rng);
  d.tx_power_w = dbm_to_watts(power_dbm(rng));
  d.max_freq_hz = r.max_freq_hz;
  d.dataset_id = id;
  return d;
}

void fill_device_channels(Topology& topo, Rng& shadow_rng, const TopologyRanges& r) {
  std::normal_distribution<double> shadow(0.0, r.shadowing_std_db);
  const std::size_t n = topo.devices.size();
  const std::size_t m = topo.edges.size();
  topo.channel.device_edge_gain.assign(n, std::vector<double>(m));
  topo.channel.device_edge_shadow_db.assign(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < m; ++e) {
      const double s = shadow(shadow_rng);
      topo.channel.device_edge_shadow_db[i][e] = s;
      topo.channel.device_edge_gain[i][e] =
          link_gain(topo.devices[i].position, topo.edges[e].position, s, r.min_link_distance_m);
    }
  }
}

}  // namespace

void TopologyRanges::validate() const {
  check_range(cycles_per_sample, "cycles_per_sample");
  check_range(num_samples, "num_samples");
  check_range(device_power_dbm, "device_power_dbm");
  check_range(edge_bandwidth_hz, "edge_bandwidth_hz");
  if (!(cycles_per_sample.min > 0.0)) throw ConfigError("cycles_per_sample must be positive");
  if (!(num_samples.min >= 1.0)) throw ConfigError("num_samples must be at least 1");
  if (!(edge_bandwidth_hz.min > 0.0)) throw ConfigError("edge bandwidth must be positive");
  if (!(max_freq_hz > 0.0)) throw ConfigError("max_freq_hz must be positive");
  if (!(shadowing_std_db >= 0.0)) throw ConfigError("shadowing_std_db must be non-negative");
  if (!(min_link_distance_m > 0.0)) throw ConfigError("min_link_distance_m must be positive");
}

Topology generate_topology(std::size_t n_devices, std::size_t n_edges, double side_m, std::uint64_t seed,
                           const TopologyRanges& ranges) {
  ranges.validate();
  if (n_edges < 1 || n_devices < n_edges) {
    throw ConfigError("generate_topology: need n_devices >= n_edges >= 1");
  }
  if (!(side_m > 0.0)) throw ConfigError("generate_topology: side length must be positive");

  Rng rng = make_rng(seed, Stream::kTopology);
  Rng shadow_rng = make_rng(seed, Stream::kShadowing);

  Topology topo;
  topo.side_length_m = side_m;
  topo.cloud_position = {side_m / 2.0, side_m / 2.0};

  std::uniform_real_distribution<double> coord(0.0, side_m);
  std::uniform_real_distribution<double> bandwidth(ranges.edge_bandwidth_hz.min, ranges.edge_bandwidth_hz.max);
  for (EdgeId e = 0; e < n_edges; ++e) {
    EdgeServer edge;
    edge.id = e;
    edge.position.x = coord(rng);
    edge.position.y = coord(rng);
    edge.bandwidth_hz = bandwidth(rng);
    edge.tx_power_w = dbm_to_watts(ranges.edge_power_dbm);
    topo.edges.push_back(edge);
  }
  for (DeviceId i = 0; i < n_devices; ++i) topo.devices.push_back(sample_device(i, side_m, rng, ranges));

  std::normal_distribution<double> shadow(0.0, ranges.shadowing_std_db);
  topo.channel.edge_cloud_gain.resize(n_edges);
  topo.channel.edge_cloud_shadow_db.resize(n_edges);
  for (EdgeId e = 0; e < n_edges; ++e) {
    const double s = shadow(shadow_rng);
    topo.channel.edge_cloud_shadow_db[e] = s;
    topo.channel.edge_cloud_gain[e] =
        link_gain(topo.edges[e].position, topo.cloud_position, s, ranges.min_link_distance_m);
  }
  fill_device_channels(topo, shadow_rng, ranges);
  return topo;
}

Topology resample_devices(const Topology& base, std::size_t n_devices, Rng& rng, const TopologyRanges& ranges) {
  ranges.validate();
  Topology topo;
  topo.side_length_m = base.side_length_m;
  topo.cloud_position = base.cloud_position;
  topo.edges = base.edges;
  topo.channel.edge_cloud_gain = base.channel.edge_cloud_gain;
  topo.channel.edge_cloud_shadow_db = base.channel.edge_cloud_shadow_db;
  for (DeviceId i = 0; i < n_devices; ++i) topo.devices.push_back(sample_device(i, base.side_length_m, rng, ranges));
  fill_device_channels(topo, rng, ranges);
  return topo;
}

EdgeId nearest_edge(const Topology& topo, DeviceId device) {
  const Position& p = topo.devices.at(device).position;
  EdgeId best = 0;
  double best_d = distance_m(p, topo.edges.at(0).position);
  for (EdgeId e = 1; e < topo.edges.size(); ++e) {
    const double d = distance_m(p, topo.edges[e].position);
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  return best;
}

void to_json(nlohmann::json& j, const Topology& topo) {
  using nlohmann::json;
  json devices = json::array();
  for (const auto& d : topo.devices) {
    devices.push_back({{"id", d.id},
                       {"x", d.position.x},
                       {"y", d.position.y},
                       {"cycles_per_sample", d.cycles_per_sample},
                       {"num_samples", d.num_samples},
                       {"tx_power_w", d.tx_power_w},
                       {"max_freq_hz", d.max_freq_hz},
                       {"dataset_id", d.dataset_id}});
  }
  json edges = json::array();
  for (const auto& e : topo.edges) {
    edges.push_back({{"id", e.id},
                     {"x", e.position.x},
                     {"y", e.position.y},
                     {"bandwidth_hz", e.bandwidth_hz},
                     {"tx_power_w", e.tx_power_w}});
  }
  j = json{{"format", "hfl-topology"},
           {"version", 1},
           {"side_length_m", topo.side_length_m},
           {"cloud", {{"x", topo.cloud_position.x}, {"y", topo.cloud_position.y}}},
           {"devices", devices},
           {"edges", edges},
           {"channel",
            {{"device_edge_gain", topo.channel.device_edge_gain},
             {"device_edge_shadow_db", topo.channel.device_edge_shadow_db},
             {"edge_cloud_gain", topo.channel.edge_cloud_gain},
             {"edge_cloud_shadow_db", topo.channel.edge_cloud_shadow_db}}}};
}

void from_json(const nlohmann::json& j, Topology& topo) {
  try {
    if (j.value("format", std::string{}) != "hfl-topology") throw ConfigError("not an hfl-topology document");
    if (j.at("version").get<int>() != 1) throw ConfigError("unsupported topology version");
    topo = Topology{};
    topo.side_length_m = j.at("side_length_m").get<double>();
    topo.cloud_position = {j.at("cloud").at("x").get<double>(), j.at("cloud").at("y").get<double>()};
    for (const auto& d : j.at("devices")) {
      Device dev;
      dev.id = d.at("id").get<DeviceId>();
      dev.position = {d.at("x").get<double>(), d.at("y").get<double>()};
      dev.cycles_per_sample = d.at("cycles_per_sample").get<double>();
      dev.num_samples = d.at("num_samples").get<std::size_t>();
      dev.tx_power_w = d.at("tx_power_w").get<double>();
      dev.max_freq_hz = d.at("max_freq_hz").get<double>();
      dev.dataset_id = d.at("dataset_id").get<std::size_t>();
      topo.devices.push_back(dev);
    }
    for (const auto& e : j.at("edges")) {
      EdgeServer edge;
      edge.id = e.at("id").get<EdgeId>();
      edge.position = {e.at("x").get<double>(), e.at("y").get<double>()};
      edge.bandwidth_hz = e.at("bandwidth_hz").get<double>();
      edge.tx_power_w = e.at("tx_power_w").get<double>();
      topo.edges.push_back(edge);
    }
    const auto& ch = j.at("channel");
    ch.at("device_edge_gain").get_to(topo.channel.device_edge_gain);
    ch.at("device_edge_shadow_db").get_to(topo.channel.device_edge_shadow_db);
    ch.at("edge_cloud_gain").get_to(topo.channel.edge_cloud_gain);
    ch.at("edge_cloud_shadow_db").get_to(topo.channel.edge_cloud_shadow_db);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed topology document: ") + e.what());
  }

  for (std::size_t i = 0; i < topo.devices.size(); ++i) {
    if (topo.devices[i].id != i) throw ConfigError("device ids must be dense from 0");
    if (topo.channel.device_edge_gain.size() != topo.devices.size() ||
        topo.channel.device_edge_gain[i].size() != topo.edges.size()) {
      throw ConfigError("channel table shape does not match devices x edges");
    }
  }
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (topo.edges[e].id != e) throw ConfigError("edge ids must be dense from 0");
  }
  if (topo.channel.edge_cloud_gain.size() != topo.edges.size()) {
    throw ConfigError("edge_cloud_gain size does not match edges");
  }
}

}  // namespace hfl
