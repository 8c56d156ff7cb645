// SPDX-License-Identifier: Apache-2.0
#include "hfl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hfl/allocator.hpp"
#include "hfl/csv.hpp"
#include "hfl/error.hpp"
#include "hfl/idx.hpp"

#ifndef HFL_VERSION
#define HFL_VERSION "unknown"
#endif

namespace hfl {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (devices < 1) throw ConfigError("config: devices must be >= 1");
  if (edges < 1) throw ConfigError("config: edges must be >= 1");
  if (!(side_m > 0.0)) throw ConfigError("config: side_m must be > 0");
  ranges.validate();
  cost.validate();
  if (!(alloc_tolerance > 0.0)) throw ConfigError("config: alloc_tolerance must be > 0");
  if (scheduled < 1 || scheduled > devices) throw ConfigError("config: scheduled must lie in [1, devices]");
  if (policy != SchedulePolicy::kRandom) {
    if (clusters < 1 || clusters > devices) throw ConfigError("config: clusters must lie in [1, devices]");
    if (per_cluster < 1) throw ConfigError("config: per_cluster must be >= 1");
    if (clusters * per_cluster != scheduled)
      throw ConfigError("config: cluster policies need scheduled == clusters * per_cluster");
  }
  if (mixture.classes < 2) throw ConfigError("config: need at least two classes");
  if (mixture.dim < mixture.classes) throw ConfigError("config: mixture dim must be >= classes");
  if (!(mixture.separation > 0.0) || !(mixture.noise > 0.0))
    throw ConfigError("config: mixture separation and noise must be > 0");
  const double k = static_cast<double>(mixture.classes);
  if (!(majority_fraction > 1.0 / k && majority_fraction <= 1.0))
    throw ConfigError("config: majority_fraction must lie in (1/classes, 1]");
  if (test_size < 1) throw ConfigError("config: test_size must be >= 1");
  const bool any_idx = !idx_train_images.empty() || !idx_train_labels.empty() || !idx_test_images.empty() ||
                       !idx_test_labels.empty();
  const bool all_idx = !idx_train_images.empty() && !idx_train_labels.empty() && !idx_test_images.empty() &&
                       !idx_test_labels.empty();
  if (any_idx && !all_idx) throw ConfigError("config: IDX data needs all four file paths");
  if (hidden < 1) throw ConfigError("config: hidden must be >= 1");
  if (!(beta > 0.0)) throw ConfigError("config: beta must be > 0");
  if (mini_features < 1) throw ConfigError("config: mini_features must be >= 1");
  if (!(mini_model_bits > 0.0)) throw ConfigError("config: mini_model_bits must be > 0");
  if (!(target_accuracy >= 0.0 && target_accuracy < 1.0))
    throw ConfigError("config: target_accuracy must lie in [0, 1)");
  if (max_rounds < 1) throw ConfigError("config: max_rounds must be >= 1");
  if (assignment.kind == AssignmentKind::kExhaustive &&
      std::pow(static_cast<double>(edges), static_cast<double>(scheduled)) > 1e6)
    throw ConfigError("config: exhaustive assignment is limited to edges^scheduled <= 1e6");
}

namespace {

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string("config: ") + key + " must be [min, max]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = json{
      {"devices", c.devices},
      {"edges", c.edges},
      {"side_m", c.side_m},
      {"ranges",
       {{"cycles_per_sample", range_json(c.ranges.cycles_per_sample)},
        {"num_samples", range_json(c.ranges.num_samples)},
        {"device_power_dbm", range_json(c.ranges.device_power_dbm)},
        {"edge_bandwidth_hz", range_json(c.ranges.edge_bandwidth_hz)},
        {"edge_power_dbm", c.ranges.edge_power_dbm},
        {"max_freq_hz", c.ranges.max_freq_hz},
        {"shadowing_std_db", c.ranges.shadowing_std_db},
        {"min_link_distance_m", c.ranges.min_link_distance_m}}},
      {"cost",
       {{"alpha", c.cost.alpha},
        {"lambda", c.cost.lambda},
        {"noise_psd_w_per_hz", c.cost.noise_psd_w_per_hz},
        {"model_bits", c.cost.model_bits},
        {"local_iters", c.cost.local_iters},
        {"edge_iters", c.cost.edge_iters},
        {"cloud_bandwidth_hz", c.cost.cloud_bandwidth_hz}}},
      {"alloc_tolerance", c.alloc_tolerance},
      {"policy", to_string(c.policy)},
      {"scheduled", c.scheduled},
      {"per_cluster", c.per_cluster},
      {"clusters", c.clusters},
      {"assignment",
       {{"kind", to_string(c.assignment.kind)},
        {"transfer_budget", c.assignment.hfel_transfer_budget},
        {"exchange_budget", c.assignment.hfel_exchange_budget},
        {"shuffle", c.assignment.hfel_shuffle}}},
      {"agent_path", c.agent_path},
      {"mixture",
       {{"classes", c.mixture.classes},
        {"dim", c.mixture.dim},
        {"separation", c.mixture.separation},
        {"noise", c.mixture.noise}}},
      {"majority_fraction", c.majority_fraction},
      {"test_size", c.test_size},
      {"idx_train_images", c.idx_train_images},
      {"idx_train_labels", c.idx_train_labels},
      {"idx_test_images", c.idx_test_images},
      {"idx_test_labels", c.idx_test_labels},
      {"hidden", c.hidden},
      {"beta", c.beta},
      {"mini_features", c.mini_features},
      {"mini_model_bits", c.mini_model_bits},
      {"target_accuracy", c.target_accuracy},
      {"max_rounds", c.max_rounds},
      {"seed", c.seed},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j,
                 {"devices", "edges", "side_m", "ranges", "cost", "alloc_tolerance", "policy", "scheduled",
                  "per_cluster", "clusters", "assignment", "agent_path", "mixture", "majority_fraction", "test_size",
                  "idx_train_images", "idx_train_labels", "idx_test_images", "idx_test_labels", "hidden", "beta",
                  "mini_features", "mini_model_bits", "target_accuracy", "max_rounds", "seed"},
                 "config");
  read(j, "devices", c.devices);
  read(j, "edges", c.edges);
  read(j, "side_m", c.side_m);
  if (j.contains("ranges")) {
    const json& r = j.at("ranges");
    reject_unknown(r,
                   {"cycles_per_sample", "num_samples", "device_power_dbm", "edge_bandwidth_hz", "edge_power_dbm",
                    "max_freq_hz", "shadowing_std_db", "min_link_distance_m"},
                   "ranges");
    if (r.contains("cycles_per_sample")) c.ranges.cycles_per_sample = range_from(r["cycles_per_sample"], "cycles_per_sample");
    if (r.contains("num_samples")) c.ranges.num_samples = range_from(r["num_samples"], "num_samples");
    if (r.contains("device_power_dbm")) c.ranges.device_power_dbm = range_from(r["device_power_dbm"], "device_power_dbm");
    if (r.contains("edge_bandwidth_hz"))
      c.ranges.edge_bandwidth_hz = range_from(r["edge_bandwidth_hz"], "edge_bandwidth_hz");
    read(r, "edge_power_dbm", c.ranges.edge_power_dbm);
    read(r, "max_freq_hz", c.ranges.max_freq_hz);
    read(r, "shadowing_std_db", c.ranges.shadowing_std_db);
    read(r, "min_link_distance_m", c.ranges.min_link_distance_m);
  }
  if (j.contains("cost")) {
    const json& p = j.at("cost");
    reject_unknown(p,
                   {"alpha", "lambda", "noise_psd_w_per_hz", "model_bits", "local_iters", "edge_iters",
                    "cloud_bandwidth_hz"},
                   "cost");
    read(p, "alpha", c.cost.alpha);
    read(p, "lambda", c.cost.lambda);
    read(p, "noise_psd_w_per_hz", c.cost.noise_psd_w_per_hz);
    read(p, "model_bits", c.cost.model_bits);
    read(p, "local_iters", c.cost.local_iters);
    read(p, "edge_iters", c.cost.edge_iters);
    read(p, "cloud_bandwidth_hz", c.cost.cloud_bandwidth_hz);
  }
  read(j, "alloc_tolerance", c.alloc_tolerance);
  if (j.contains("policy")) c.policy = parse_schedule_policy(j.at("policy").get<std::string>());
  read(j, "scheduled", c.scheduled);
  read(j, "per_cluster", c.per_cluster);
  read(j, "clusters", c.clusters);
  if (j.contains("assignment")) {
    const json& a = j.at("assignment");
    reject_unknown(a, {"kind", "transfer_budget", "exchange_budget", "shuffle"}, "assignment");
    if (a.contains("kind")) c.assignment.kind = parse_assignment_kind(a.at("kind").get<std::string>());
    read(a, "transfer_budget", c.assignment.hfel_transfer_budget);
    read(a, "exchange_budget", c.assignment.hfel_exchange_budget);
    read(a, "shuffle", c.assignment.hfel_shuffle);
  }
  read(j, "agent_path", c.agent_path);
  if (j.contains("mixture")) {
    const json& m = j.at("mixture");
    reject_unknown(m, {"classes", "dim", "separation", "noise"}, "mixture");
    read(m, "classes", c.mixture.classes);
    read(m, "dim", c.mixture.dim);
    read(m, "separation", c.mixture.separation);
    read(m, "noise", c.mixture.noise);
  }
  read(j, "majority_fraction", c.majority_fraction);
  read(j, "test_size", c.test_size);
  read(j, "idx_train_images", c.idx_train_images);
  read(j, "idx_train_labels", c.idx_train_labels);
  read(j, "idx_test_images", c.idx_test_images);
  read(j, "idx_test_labels", c.idx_test_labels);
  read(j, "hidden", c.hidden);
  read(j, "beta", c.beta);
  read(j, "mini_features", c.mini_features);
  read(j, "mini_model_bits", c.mini_model_bits);
  read(j, "target_accuracy", c.target_accuracy);
  read(j, "max_rounds", c.max_rounds);
  read(j, "seed", c.seed);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<Eigen::Index> strided_features(Eigen::Index dim, std::size_t count) {
  const auto n = std::min<Eigen::Index>(dim, static_cast<Eigen::Index>(count));
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(i * dim / n);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Workload build_workload(const ExperimentConfig& config) {
  config.validate();
  Workload w;
  w.topology = generate_topology(config.devices, config.edges, config.side_m, config.seed, config.ranges);

  std::vector<std::size_t> sizes;
  for (const auto& d : w.topology.devices) sizes.push_back(d.num_samples);
  const std::size_t k = config.mixture.classes;

  Dataset pool;
  Eigen::Index dim = 0;
  if (!config.idx_train_images.empty()) {
    pool = load_idx_dataset(config.idx_train_images, config.idx_train_labels);
    w.test = load_idx_dataset(config.idx_test_images, config.idx_test_labels);
    dim = pool.x.cols();
    if (w.test.x.cols() != dim) throw ConfigError("config: IDX train and test widths differ");
  } else {
    MixtureSpec spec = config.mixture;
    spec.seed = config.seed;
    const MixtureModel mixture(spec);
    // Enough samples per class for the worst case: every device whose
    // majority is c at full size, plus every other device's minority share.
    const std::size_t max_size = *std::max_element(sizes.begin(), sizes.end());
    const std::size_t majority_devices = (config.devices + k - 1) / k;
    const auto minority = static_cast<std::size_t>(std::ceil((1.0 - config.majority_fraction) * max_size)) + 1;
    const std::size_t per_class = majority_devices * max_size + config.devices * minority;
    Rng data_rng = make_rng(config.seed, Stream::kData);
    pool = mixture.sample(std::vector<std::size_t>(k, per_class), data_rng);
    Rng test_rng = make_rng(config.seed, Stream::kEvaluation);
    w.test = mixture.sample_balanced(config.test_size, test_rng);
    dim = static_cast<Eigen::Index>(spec.dim);
  }
  w.partition = partition_non_iid(pool, sizes, k, config.majority_fraction, config.seed);
  w.learner = std::make_unique<MlpClassifier>(dim, static_cast<Eigen::Index>(config.hidden),
                                              static_cast<Eigen::Index>(k));
  w.mini = std::make_unique<SoftmaxClassifier>(strided_features(dim, config.mini_features),
                                               static_cast<Eigen::Index>(k));
  return w;
}

namespace {

ClusterSet cluster_with(const Workload& w, const Learner& model, const ExperimentConfig& config) {
  const ModelParams init = model.initial_params(config.seed);
  const AuxTrainer trainer = [&](DeviceId d) {
    return local_train(model, init, w.partition.devices.at(d), config.cost.local_iters, config.beta).weights;
  };
  return cluster_devices(config.devices, trainer, config.clusters, config.seed);
}

ClusteringCost clustering_cost(const Workload& w, const ExperimentConfig& config, bool mini) {
  const double bits = mini ? config.mini_model_bits : config.cost.model_bits;
  // Local work scales with model size.
  const double scale = bits / config.cost.model_bits;
  return clustering_phase_cost(w.topology, config.cost, bits, scale);
}

AssignmentOutcome assign_round(const std::vector<DeviceId>& schedule, const Topology& topo,
                               const ExperimentConfig& config, const Agent* agent) {
  switch (config.assignment.kind) {
    case AssignmentKind::kGeographic: {
      const auto t0 = std::chrono::steady_clock::now();
      AssignmentPattern pattern = assign_geographic(schedule, topo);
      const double wall = seconds_since(t0);
      AssignmentOutcome out = evaluate_pattern(pattern, topo, config.cost, config.alloc_tolerance);
      out.wall_time_s = wall;
      return out;
    }
    case AssignmentKind::kHfel:
      return assign_hfel(schedule, topo, config.cost, config.assignment, config.alloc_tolerance);
    case AssignmentKind::kExhaustive:
      return assign_exhaustive(schedule, topo, config.cost, config.alloc_tolerance);
    case AssignmentKind::kDrl:
      if (!agent) throw ConfigError("run: drl assignment needs an agent");
      return assign_drl(*agent, schedule, topo, config.cost, config.alloc_tolerance);
  }
  throw ContractViolation("run: unhandled assignment kind");
}

}  // namespace

double uplink_bytes(const AssignmentPattern& pattern, const CostParams& params) {
  double uploads = 0.0;
  for (const auto& g : pattern.groups) {
    if (g.empty()) continue;
    uploads += static_cast<double>(params.edge_iters) * static_cast<double>(g.size()) + 1.0;
  }
  return uploads * params.model_bits / 8.0;
}

RunRecord run_experiment(const ExperimentConfig& config, const Agent* agent) {
  config.validate();
  std::optional<Agent> loaded;
  if (config.assignment.kind == AssignmentKind::kDrl && !agent) {
    if (config.agent_path.empty()) throw ConfigError("run: drl assignment needs agent_path");
    loaded.emplace(Agent::load(config.agent_path));
    agent = &*loaded;
  }
  if (agent && config.assignment.kind == AssignmentKind::kDrl &&
      (agent->config().horizon != config.scheduled || agent->config().edges != config.edges))
    throw ConfigError("run: agent was trained for a different H or M");

  const Workload w = build_workload(config);
  RunRecord rec;
  rec.seed = config.seed;
  rec.config_hash = config_hash(config);

  ClusterSet clusters;
  if (config.policy != SchedulePolicy::kRandom) {
    const bool mini = config.policy == SchedulePolicy::kIkc;
    clusters = cluster_with(w, mini ? *w.mini : *w.learner, config);
    rec.ari = adjusted_rand_index(clusters, w.partition.majority);
    rec.clustering = clustering_cost(w, config, mini);
  }
  Scheduler scheduler(SchedulerConfig{config.policy, config.per_cluster, config.scheduled, config.seed}, clusters,
                      config.devices);

  ModelParams global = w.learner->initial_params(config.seed);
  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    const Schedule schedule = scheduler.next(round);
    const AssignmentOutcome outcome = assign_round(schedule.members, w.topology, config, agent);
    global = run_global_iteration(*w.learner, global, outcome.pattern, w.partition, config.cost.local_iters,
                                  config.cost.edge_iters, config.beta);
    RoundRow row;
    row.round = round + 1;
    row.accuracy = evaluate(*w.learner, global, w.test);
    row.time = outcome.round_time;
    row.energy = outcome.round_energy;
    row.objective = outcome.objective;
    row.uplink_bytes = uplink_bytes(outcome.pattern, config.cost);
    row.assign_wall_s = outcome.wall_time_s;
    row.scheduled = schedule.members.size();
    rec.rows.push_back(row);
    rec.total_time += row.time;
    rec.total_energy += row.energy;
    rec.total_objective += row.objective;
    rec.total_bytes += row.uplink_bytes;
    if (row.accuracy >= config.target_accuracy) {
      rec.converged = true;
      break;
    }
  }
  rec.rounds = rec.rows.size();
  return rec;
}

std::string rounds_csv_header() {
  return "round,accuracy,policy,scheduled,time_s,energy_j,objective,uplink_bytes,assign_wall_s\n";
}

std::string rounds_csv_row(const RoundRow& row, const std::string& policy) {
  return csv_line({format_number(row.round), format_number(row.accuracy), policy, format_number(row.scheduled),
                   format_number(row.time), format_number(row.energy), format_number(row.objective),
                   format_number(row.uplink_bytes), format_number(row.assign_wall_s)});
}

void write_run(const std::string& dir, const ExperimentConfig& config, const RunRecord& record) {
  std::filesystem::create_directories(dir);
  std::string csv = rounds_csv_header();
  for (const auto& row : record.rows) csv += rounds_csv_row(row, to_string(config.policy));
  write_file_atomic((std::filesystem::path(dir) / "rounds.csv").string(), csv);

  json manifest{
      {"version", HFL_VERSION},
      {"config", config},
      {"config_hash", record.config_hash},
      {"seed", record.seed},
      {"converged", record.converged},
      {"rounds", record.rounds},
      {"total_time_s", record.total_time},
      {"total_energy_j", record.total_energy},
      {"total_objective", record.total_objective},
      {"total_uplink_bytes", record.total_bytes},
      {"clustering",
       {{"time_s", record.clustering.time},
        {"energy_j", record.clustering.energy},
        {"uplink_bytes", record.clustering.uplink_bytes}}},
  };
  manifest["ari"] = std::isnan(record.ari) ? json(nullptr) : json(record.ari);
  write_file_atomic((std::filesystem::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

std::vector<SweepRow> sweep(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                            std::size_t repetitions, const Agent* agent,
                            const std::function<void(const std::string&, std::size_t, const RunRecord*)>& on_run) {
  if (repetitions < 1) throw ConfigError("sweep: repetitions must be >= 1");
  std::vector<SweepRow> rows;
  for (const auto& [label, base] : configs) {
    SweepRow row;
    row.label = label;
    std::vector<double> rounds, time, energy, objective, bytes;
    for (std::size_t r = 0; r < repetitions; ++r) {
      ExperimentConfig cfg = base;
      cfg.seed = base.seed + r;
      ++row.runs;
      try {
        RunRecord rec = run_experiment(cfg, agent);
        rounds.push_back(static_cast<double>(rec.rounds));
        time.push_back(rec.total_time);
        energy.push_back(rec.total_energy);
        objective.push_back(rec.total_objective);
        bytes.push_back(rec.total_bytes);
        if (rec.converged) ++row.converged;
        row.records.push_back(std::move(rec));
        if (on_run) on_run(label, r, &row.records.back());
      } catch (const std::exception& e) {
        ++row.failures;
        row.errors.push_back("seed " + std::to_string(cfg.seed) + ": " + e.what());
        if (on_run) on_run(label, r, nullptr);
      }
    }
    row.rounds = summarize(rounds);
    row.time = summarize(time);
    row.energy = summarize(energy);
    row.objective = summarize(objective);
    row.bytes = summarize(bytes);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv_header() {
  return "label,runs,failures,converged,rounds_mean,rounds_std,time_mean,time_std,energy_mean,energy_std,"
         "objective_mean,objective_std,bytes_mean,bytes_std\n";
}

std::string sweep_csv_row(const SweepRow& row) {
  return csv_line({row.label, format_number(row.runs), format_number(row.failures), format_number(row.converged),
                   format_number(row.rounds.mean), format_number(row.rounds.stddev), format_number(row.time.mean),
                   format_number(row.time.stddev), format_number(row.energy.mean), format_number(row.energy.stddev),
                   format_number(row.objective.mean), format_number(row.objective.stddev),
                   format_number(row.bytes.mean), format_number(row.bytes.stddev)});
}

CompareResult compare_assignment(const Topology& base, std::size_t horizon, std::size_t instances,
                                 const std::vector<std::string>& strategies, const CostParams& params,
                                 std::uint64_t seed, const Agent* agent, double tolerance) {
  if (horizon < 1 || instances < 1) throw ConfigError("compare: horizon and instances must be >= 1");
  for (const auto& s : strategies) {
    if (s != "geographic" && s != "hfel" && s != "hfel-100" && s != "hfel-300" && s != "exhaustive" && s != "drl")
      throw ConfigError("compare: unknown strategy '" + s + "'");
    if (s == "drl") {
      if (!agent) throw ConfigError("compare: drl needs an agent");
      if (agent->config().horizon != horizon || agent->config().edges != base.num_edges())
        throw ConfigError("compare: agent was trained for a different H or M");
    }
  }
  CompareResult result;
  result.outcomes.resize(strategies.size());
  std::vector<DeviceId> schedule(horizon);
  for (std::size_t i = 0; i < horizon; ++i) schedule[i] = i;

  Rng env = make_rng(seed, Stream::kEnvironment);
  for (std::size_t n = 0; n < instances; ++n) {
    const Topology topo = resample_devices(base, horizon, env);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const std::string& name = strategies[s];
      AssignmentOutcome out;
      if (name == "geographic") {
        const auto t0 = std::chrono::steady_clock::now();
        const AssignmentPattern pattern = assign_geographic(schedule, topo);
        const double wall = seconds_since(t0);
        out = evaluate_pattern(pattern, topo, params, tolerance);
        out.wall_time_s = wall;
      } else if (name == "exhaustive") {
        out = assign_exhaustive(schedule, topo, params, tolerance);
      } else if (name == "drl") {
        out = assign_drl(*agent, schedule, topo, params, tolerance);
      } else {
        AssignmentStrategy st;
        st.hfel_exchange_budget = name == "hfel-100" ? 100 : 300;
        out = assign_hfel(schedule, topo, params, st, tolerance);
      }
      result.outcomes[s].push_back(std::move(out));
    }
  }
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    CompareRow row;
    row.strategy = strategies[s];
    row.instances = instances;
    for (const auto& o : result.outcomes[s]) {
      row.mean_time += o.round_time;
      row.mean_energy += o.round_energy;
      row.mean_objective += o.objective;
      row.mean_wall_s += o.wall_time_s;
    }
    const double n = static_cast<double>(instances);
    row.mean_time /= n;
    row.mean_energy /= n;
    row.mean_objective /= n;
    row.mean_wall_s /= n;
    result.summary.push_back(row);
  }
  return result;
}

std::string compare_csv_header() { return "strategy,instances,time_s,energy_j,objective,wall_s\n"; }

std::string compare_csv_row(const CompareRow& row) {
  return csv_line({row.strategy, format_number(row.instances), format_number(row.mean_time),
                   format_number(row.mean_energy), format_number(row.mean_objective), format_number(row.mean_wall_s)});
}

ClusterEval cluster_eval(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  if (cfg.policy == SchedulePolicy::kRandom) cfg.policy = SchedulePolicy::kIkc;
  const Workload w = build_workload(cfg);
  ClusterEval out;
  out.clusters_ikc = cluster_with(w, *w.mini, cfg);
  out.clusters_vkc = cluster_with(w, *w.learner, cfg);
  out.ari_ikc = adjusted_rand_index(out.clusters_ikc, w.partition.majority);
  out.ari_vkc = adjusted_rand_index(out.clusters_vkc, w.partition.majority);
  out.cost_ikc = clustering_cost(w, cfg, true);
  out.cost_vkc = clustering_cost(w, cfg, false);
  return out;
}

}  // namespace hfl
