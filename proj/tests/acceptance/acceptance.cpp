// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freshness.hpp"
#include "grid_oracle.hpp"
#include "hfl/allocator.hpp"
#include "hfl/assigner.hpp"
#include "hfl/cost.hpp"
#include "hfl/d3qn.hpp"
#include "hfl/fl.hpp"
#include "hfl/harness.hpp"
#include "hfl/scheduler.hpp"

using namespace hfl;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

Device hand_device(DeviceId id, double u, std::size_t d, double p) {
  Device dev;
  dev.id = id;
  dev.cycles_per_sample = u;
  dev.num_samples = d;
  dev.tx_power_w = p;
  dev.max_freq_hz = 2e9;
  return dev;
}

Verdict cost_exactness() {
  Topology topo;
  CostParams params;
  params.noise_psd_w_per_hz = 1e-20;
  params.model_bits = 1e6;
  params.cloud_bandwidth_hz = 1e6;
  topo.edges = {EdgeServer{0, {0, 0}, 2e6, 1.0}, EdgeServer{1, {0, 0}, 2e6, 2.0}};
  topo.devices = {hand_device(0, 2e4, 500, 0.1), hand_device(1, 1e4, 400, 0.2), hand_device(2, 5e4, 600, 0.05),
                  hand_device(3, 1e4, 500, 0.1)};
  topo.channel.device_edge_gain = {{1e-13, 1e-13}, {1.5e-13, 1e-13}, {1e-13, 1e-13}, {1e-13, 4.5e-13}};
  topo.channel.device_edge_shadow_db.assign(4, {0.0, 0.0});
  topo.channel.edge_cloud_gain = {1e-14, 1.5e-14};
  topo.channel.edge_cloud_shadow_db = {0.0, 0.0};
  AssignmentPattern pattern(2);
  pattern.groups = {{0, 1}, {2, 3}};
  Allocation alloc;
  alloc.bandwidth = {{0, 1e6}, {1, 1e6}, {2, 0.5e6}, {3, 1.5e6}};
  alloc.frequency = {{0, 1e9}, {1, 5e8}, {2, 2e9}, {3, 1e9}};

  const CostReport r = round_report(pattern, alloc, topo, params);
  CostParams table;
  const Device d = hand_device(0, 1e4, 500, 0.2);
  const TimeEnergy comm = comm_time_energy(d, table.noise_psd_w_per_hz * 1e6 / d.tx_power_w, 1e6, table);
  const std::vector<std::pair<double, double>> checks{
      {compute_time(hand_device(0, 2e4, 500, 0.1), 1e9, 5), 0.05},
      {compute_energy(hand_device(0, 2e4, 500, 0.1), 1e9, 5, 2e-28), 5e-3},
      {tx_rate(1e6, 3e-14, 1.0, 1e-20), 2e6},
      {comm.time, 3.670016},
      {r.per_edge_time[0], 6.25},
      {r.per_edge_energy[0], 2.0275},
      {r.per_edge_time[1], 10.875},
      {r.per_edge_energy[1], 1.9791666666666667},
      {r.round_time, 10.875},
      {r.round_energy, 4.006666666666667},
      {r.objective, 14.881666666666668},
  };
  double worst = 0.0;
  for (const auto& [got, want] : checks) worst = std::max(worst, std::abs(got - want) / std::abs(want));
  return {worst <= 1e-9, fmt("%zu hand values, worst relative error %.2e", checks.size(), worst)};
}

// ---------------------------------------------------------------- 2

Verdict allocator_optimality() {
  CostParams params;
  params.lambda = 1.0;
  double worst_gap = -1.0, worst_wall = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t n = 1 + i % 4;
    const Topology t = generate_topology(n, 1, 1000.0, 5000 + i);
    std::vector<DeviceId> members(n);
    std::iota(members.begin(), members.end(), 0);
    const AllocRequest req = make_request(t, 0, members, params);
    const auto t0 = Clock::now();
    const AllocResult res = solve_edge(req);
    const double wall = seconds_since(t0);

    std::vector<oracle::OracleDevice> devs;
    for (const auto& m : req.members)
      devs.push_back({m.device.cycles_per_sample, static_cast<double>(m.device.num_samples), m.device.tx_power_w,
                      m.gain, m.device.max_freq_hz});
    const double cb = params.cloud_bandwidth_hz;
    const double rate = cb * std::log2(1.0 + req.cloud_gain * req.edge.tx_power_w / (params.noise_psd_w_per_hz * cb));
    const double tc = params.model_bits / rate;
    oracle::OracleParams op;
    op.alpha = params.alpha;
    op.lambda = params.lambda;
    op.n0 = params.noise_psd_w_per_hz;
    op.z = params.model_bits;
    op.L = params.local_iters;
    op.Q = params.edge_iters;
    const int steps = n <= 2 ? 2000 : n == 3 ? 300 : 100;
    const double oracle = oracle::grid_oracle(devs, {req.edge.bandwidth_hz, tc, req.edge.tx_power_w * tc}, op, steps);
    const double gap = (res.objective - oracle) / oracle;
    worst_gap = std::max(worst_gap, gap);
    worst_wall = std::max(worst_wall, wall);
    ok = ok && res.converged && std::abs(gap) <= 0.02 && wall < 1.0;
  }
  return {ok, fmt("20 instances, worst (solver - oracle)/oracle %+.2e, slowest solve %.4f s", worst_gap, worst_wall)};
}

// ---------------------------------------------------------------- 3

Verdict hfel_near_optimality() {
  const Topology base = generate_topology(6, 2, 1000.0, 31);
  const CompareResult r =
      compare_assignment(base, 6, 50, {"geographic", "hfel-300", "exhaustive"}, CostParams{}, 2024);
  std::size_t order_violations = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const double geo = r.outcomes[0][i].objective, hfel = r.outcomes[1][i].objective, ex = r.outcomes[2][i].objective;
    worst = std::max(worst, (hfel - ex) / ex);
    if (ex > hfel * (1 + 1e-9) || hfel > geo * (1 + 1e-12)) ++order_violations;
  }
  return {worst <= 0.05 && order_violations == 0,
          fmt("50 instances, worst HFEL gap %.3f%%, ordering violations %zu", 100 * worst, order_violations)};
}

// ---------------------------------------------------------------- 4

Verdict drl_imitation() {
  const auto t0 = Clock::now();
  const Topology base = generate_topology(40, 3, 1000.0, 7);
  TrainConfig tc;
  tc.agent.edges = 3;
  tc.agent.horizon = 20;
  tc.agent.hidden = 32;
  tc.agent.shared = 64;
  tc.agent.optimizer = Optimizer::kAdam;
  tc.agent.learning_rate = 3e-4;
  tc.episodes = 2000;
  tc.seed = 1;
  std::vector<double> returns;
  const TrainResult trained = train_agent(tc, base, [&](const EpisodeStats& s) {
    returns.push_back(s.episode_return);
    if ((s.episode + 1) % 250 == 0) {
      std::printf("   C4 episode %zu, mean return of last 250: %.2f\n", s.episode + 1,
                  std::accumulate(returns.end() - 250, returns.end(), 0.0) / 250.0);
      std::fflush(stdout);
    }
  });
  const double train_s = seconds_since(t0);
  const std::size_t window = 100;
  const double smoothed = std::accumulate(returns.end() - window, returns.end(), 0.0) / static_cast<double>(window);

  const CompareResult r =
      compare_assignment(base, 20, 100, {"geographic", "hfel-300", "drl"}, CostParams{}, 999, &trained.agent);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 100; ++i)
    for (DeviceId d = 0; d < 20; ++d) agree += r.outcomes[1][i].pattern.edge_of(d) == r.outcomes[2][i].pattern.edge_of(d);
  const double agreement = static_cast<double>(agree) / 2000.0;
  const double speedup = r.summary[1].mean_wall_s / r.summary[2].mean_wall_s;
  const double total_s = seconds_since(t0);

  const bool a = smoothed > 0.7 * 20;
  const bool b = agreement >= 0.70;
  const bool c = speedup >= 10.0;
  const bool d = r.summary[2].mean_objective <= r.summary[0].mean_objective;
  const bool budget = total_s <= 1800.0;
  auto pf = [](bool x) { return x ? "PASS" : "FAIL"; };
  return {a && b && c && d && budget,
          fmt("(a) %s smoothed return %.2f vs 14; (b) %s held-out agreement %.1f%%; (c) %s speedup %.0fx over "
              "HFEL-300; (d) %s objective drl %.3f vs geographic %.3f (HFEL-300 %.3f); %s wall %.0f s (train %.0f s)",
              pf(a), smoothed, pf(b), 100 * agreement, pf(c), speedup, pf(d), r.summary[2].mean_objective,
              r.summary[0].mean_objective, r.summary[1].mean_objective, pf(budget), total_s, train_s)};
}

// ---------------------------------------------------------------- 5, 6, 7

ExperimentConfig synthetic_workload() {
  ExperimentConfig c;
  c.devices = 100;
  c.edges = 3;
  c.clusters = 10;
  c.per_cluster = 3;
  c.scheduled = 30;
  c.majority_fraction = 0.8;
  c.mixture = MixtureSpec{10, 16, 3.0, 1.0, 0};
  c.target_accuracy = 0.8;
  c.max_rounds = 60;
  c.seed = 1;
  return c;
}

Verdict clustering_fidelity() {
  const ClusterEval e = cluster_eval(synthetic_workload());
  const double bytes_ratio = e.cost_vkc.uplink_bytes / e.cost_ikc.uplink_bytes;
  const double energy_ratio = e.cost_vkc.energy / e.cost_ikc.energy;
  return {e.ari_ikc >= 0.9 && bytes_ratio >= 10.0 && energy_ratio >= 10.0,
          fmt("ARI IKC %.3f (VKC %.3f), VKC/IKC bytes %.1fx, energy %.1fx", e.ari_ikc, e.ari_vkc, bytes_ratio,
              energy_ratio)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict scheduling_order() {
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  for (auto policy : {SchedulePolicy::kIkc, SchedulePolicy::kVkc, SchedulePolicy::kRandom}) {
    ExperimentConfig c = synthetic_workload();
    c.policy = policy;
    configs.emplace_back(to_string(policy), c);
  }
  const auto rows = sweep(configs, 5);
  std::vector<double> med;
  std::ostringstream detail;
  bool ok = true;
  for (const auto& row : rows) {
    std::vector<double> rounds;
    for (const auto& rec : row.records) rounds.push_back(rec.converged ? static_cast<double>(rec.rounds) : INFINITY);
    ok = ok && row.failures == 0;
    med.push_back(median(rounds));
    detail << row.label << " median " << med.back() << " (";
    for (std::size_t i = 0; i < rounds.size(); ++i) detail << (i ? " " : "") << rounds[i];
    detail << "), ";
  }
  const double wall = seconds_since(t0);
  ok = ok && std::isfinite(med[0]) && med[0] <= med[1] && med[1] <= med[2] && wall <= 600.0;
  detail << fmt("wall %.0f s", wall);
  return {ok, detail.str()};
}

Verdict ikc_freshness() {
  std::size_t checked = 0, violations = 0, rounds_total = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig c = synthetic_workload();
    c.seed = seed;
    const ClusterEval e = cluster_eval(c);
    for (std::size_t h : {1, 2, 3}) {
      Scheduler s(SchedulerConfig{SchedulePolicy::kIkc, h, h * 10, seed}, e.clusters_ikc, c.devices);
      std::size_t horizon = 0;
      for (const auto& cl : e.clusters_ikc.clusters) horizon = std::max(horizon, 5 * ((cl.size() + h - 1) / h));
      std::vector<std::vector<std::size_t>> trace;
      for (std::size_t r = 0; r < horizon; ++r) trace.push_back(s.next(r).members);
      for (const auto& cl : e.clusters_ikc.clusters) {
        const std::size_t rounds = 5 * ((cl.size() + h - 1) / h);
        const std::vector<std::vector<std::size_t>> prefix(trace.begin(), trace.begin() + static_cast<long>(rounds));
        violations += oracle::freshness_violations(prefix, cl).size();
        ++checked;
        rounds_total += rounds;
      }
    }
  }
  return {violations == 0, fmt("%zu cluster traces, %zu rounds, %zu violations", checked, rounds_total, violations)};
}

// ---------------------------------------------------------------- 8

Verdict objective_reduction() {
  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  ExperimentConfig base;
  base.devices = 30;
  base.clusters = 6;
  base.max_rounds = 60;
  for (std::size_t h : {1, 2, 3, 4}) {
    ExperimentConfig c = base;
    c.policy = SchedulePolicy::kIkc;
    c.per_cluster = h;
    c.scheduled = 6 * h;
    configs.emplace_back("ikc/H=" + std::to_string(c.scheduled), c);
  }
  ExperimentConfig full = base;
  full.policy = SchedulePolicy::kRandom;
  full.scheduled = base.devices;
  configs.emplace_back("full/H=30", full);
  const auto rows = sweep(configs, 3);
  std::ostringstream detail;
  double best_partial = INFINITY;
  bool all_converged = true;
  for (const auto& row : rows) {
    all_converged = all_converged && row.failures == 0 && row.converged == row.runs;
    detail << row.label << " " << fmt("%.1f", row.objective.mean) << " (" << row.rounds.mean << " rounds), ";
    if (&row != &rows.back()) best_partial = std::min(best_partial, row.objective.mean);
  }
  const double full_obj = rows.back().objective.mean;
  detail << "best partial / full = " << fmt("%.3f", best_partial / full_obj);
  return {all_converged && best_partial < full_obj, detail.str()};
}

// ---------------------------------------------------------------- 9

std::vector<State> random_states(const AgentConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(c.horizon), static_cast<Eigen::Index>(c.feature_dim()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
  const auto shared = std::make_shared<const Eigen::MatrixXd>(f);
  std::vector<State> s;
  for (std::size_t t = 0; t < c.horizon; ++t) s.push_back({shared, t});
  return s;
}

double fd_worst(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& f, const Eigen::VectorXd& p) {
  Eigen::VectorXd g;
  f(p, &g);
  const double eps = 1e-6;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    Eigen::VectorXd hi = p, lo = p;
    hi(k) += eps;
    lo(k) -= eps;
    const double fd = (f(hi, nullptr) - f(lo, nullptr)) / (2 * eps);
    worst = std::max(worst, std::abs(g(k) - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

Verdict property_suites() {
  std::ostringstream detail;
  bool ok = true;

  // dueling centering
  AgentConfig ac;
  ac.edges = 3;
  ac.horizon = 8;
  ac.hidden = 8;
  ac.shared = 8;
  ac.seed = 2;
  const Agent agent(ac);
  const auto states = random_states(ac, 3);
  const QOutput out = agent.network().forward(agent.online(), states);
  double centering = 0.0;
  for (Eigen::Index j = 0; j < out.q.cols(); ++j)
    centering = std::max(centering, std::abs(out.q.col(j).mean() - out.value(j)));
  ok = ok && centering <= 1e-9;
  detail << fmt("centering %.1e; ", centering);

  // two-level aggregation against flat weighting
  MixtureModel mm(MixtureSpec{4, 6, 2.0, 1.0, 5});
  Rng rng(4);
  const Dataset pool = mm.sample(std::vector<std::size_t>(4, 300), rng);
  const DataPartition part = partition_non_iid(pool, {30, 41, 25, 60, 33, 47}, 4, 0.7, 6);
  const MlpClassifier mlp(6, 5, 4);
  const ModelParams w0 = mlp.initial_params(7);
  AssignmentPattern one(1), split(3);
  one.groups = {{0, 1, 2, 3, 4, 5}};
  split.groups = {{0, 5}, {1, 2}, {3, 4}};
  const ModelParams a = run_global_iteration(mlp, w0, one, part, 3, 1, 0.05);
  const ModelParams b = run_global_iteration(mlp, w0, split, part, 3, 1, 0.05);
  const double agg = (a.weights - b.weights).cwiseAbs().maxCoeff();
  ok = ok && agg <= 1e-12;
  detail << fmt("aggregation %.1e; ", agg);

  // finite differences: Q-network and local learner
  std::vector<std::size_t> actions;
  Eigen::VectorXd y(static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    actions.push_back(j % 3);
    y(static_cast<Eigen::Index>(j)) = j % 2 ? 0.8 : -0.6;
  }
  const double fd_q = fd_worst(
      [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) { return agent.network().loss(p, states, actions, y, g); },
      agent.online());
  const double fd_mlp = fd_worst(
      [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
        ModelParams mp = w0;
        mp.weights = p;
        return mlp.loss_and_gradient(mp, part.devices[0], g);
      },
      w0.weights);
  ok = ok && fd_q <= 1e-4 && fd_mlp <= 1e-4;
  detail << fmt("gradients q %.1e mlp %.1e; ", fd_q, fd_mlp);

  // bitwise determinism
  ExperimentConfig c;
  c.devices = 20;
  c.scheduled = 6;
  c.per_cluster = 1;
  c.max_rounds = 3;
  c.target_accuracy = 0.99;
  const RunRecord r1 = run_experiment(c), r2 = run_experiment(c);
  bool same = r1.rows.size() == r2.rows.size() && r1.total_objective == r2.total_objective;
  for (std::size_t i = 0; same && i < r1.rows.size(); ++i) same = r1.rows[i].accuracy == r2.rows[i].accuracy;
  TrainConfig tc;
  tc.agent = ac;
  tc.episodes = 10;
  const Topology base = generate_topology(10, 3, 1000.0, 1);
  same = same && train_agent(tc, base).agent.online() == train_agent(tc, base).agent.online();
  ok = ok && same;
  detail << "determinism " << (same ? "bitwise" : "differs");
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"cost model exactness", cost_exactness},
      {"allocator optimality", allocator_optimality},
      {"HFEL near-optimality", hfel_near_optimality},
      {"D3QN imitation", drl_imitation},
      {"clustering fidelity", clustering_fidelity},
      {"scheduling convergence order", scheduling_order},
      {"IKC freshness", ikc_freshness},
      {"partial participation objective", objective_reduction},
      {"property suites", property_suites},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::printf("C%d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
