// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <memory>
#include <numeric>

#include "hfl/allocator.hpp"
#include "hfl/assigner.hpp"
#include "hfl/d3qn.hpp"
#include "hfl/fl.hpp"

using namespace hfl;

static void BM_SolveEdge(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Topology topo = generate_topology(n, 1, 1000.0, 5);
  std::vector<DeviceId> members(n);
  std::iota(members.begin(), members.end(), 0);
  const AllocRequest req = make_request(topo, 0, members, CostParams{});
  for (auto _ : state) benchmark::DoNotOptimize(solve_edge(req).objective);
}
BENCHMARK(BM_SolveEdge)->Arg(2)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

static void BM_Hfel(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const Topology topo = generate_topology(h, 3, 1000.0, 9);
  std::vector<DeviceId> schedule(h);
  std::iota(schedule.begin(), schedule.end(), 0);
  AssignmentStrategy st;
  st.hfel_exchange_budget = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(assign_hfel(schedule, topo, CostParams{}, st).objective);
}
BENCHMARK(BM_Hfel)->Args({12, 100})->Args({20, 300})->Args({30, 300})->Unit(benchmark::kMillisecond);

static void BM_DrlRollout(benchmark::State& state) {
  AgentConfig c;
  c.horizon = 20;
  const Agent agent(c);
  const Topology topo = generate_topology(20, 3, 1000.0, 9);
  std::vector<DeviceId> schedule(20);
  std::iota(schedule.begin(), schedule.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(drl_pattern(agent, schedule, topo));
}
BENCHMARK(BM_DrlRollout)->Unit(benchmark::kMicrosecond);

static void BM_AgentUpdate(benchmark::State& state) {
  AgentConfig c;
  c.horizon = 20;
  Agent agent(c);
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd f(20, static_cast<Eigen::Index>(c.feature_dim()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
  const auto feat = std::make_shared<const Eigen::MatrixXd>(f);
  std::vector<Transition> ts;
  for (std::size_t j = 0; j < c.batch; ++j)
    ts.push_back({State{feat, j % 20}, j % 3, 1.0, j % 20 == 19 ? std::nullopt : std::optional<State>(State{feat, j % 20 + 1})});
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(batch));
}
BENCHMARK(BM_AgentUpdate)->Unit(benchmark::kMillisecond);

static void BM_LocalTrain(benchmark::State& state) {
  const MixtureModel mm(MixtureSpec{10, 16, 3.0, 1.0, 1});
  Rng rng(2);
  const Dataset data = mm.sample_balanced(static_cast<std::size_t>(state.range(0)), rng);
  const MlpClassifier mlp(16, 16, 10);
  const ModelParams p = mlp.initial_params(1);
  for (auto _ : state) benchmark::DoNotOptimize(local_train(mlp, p, data, 5, 0.05).weights.sum());
}
BENCHMARK(BM_LocalTrain)->Arg(400)->Arg(700)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
