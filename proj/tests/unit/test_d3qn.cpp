// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "hfl/csv.hpp"
#include "hfl/d3qn.hpp"
#include "hfl/error.hpp"

using namespace hfl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

AgentConfig small_config(std::size_t edges = 3, std::size_t horizon = 5, std::size_t width = 8) {
  AgentConfig c;
  c.edges = edges;
  c.horizon = horizon;
  c.hidden = width;
  c.shared = width;
  c.batch = 8;
  c.replay_capacity = 64;
  c.seed = 3;
  return c;
}

std::shared_ptr<const MatrixXd> random_features(const AgentConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd f(static_cast<Eigen::Index>(c.horizon), static_cast<Eigen::Index>(c.feature_dim()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
  return std::make_shared<const MatrixXd>(f);
}

std::vector<State> all_states(const AgentConfig& c, std::uint64_t seed) {
  const auto f = random_features(c, seed);
  std::vector<State> s;
  for (std::size_t t = 0; t < c.horizon; ++t) s.push_back({f, t});
  return s;
}

// Sets the target network so every state maps to V + A - mean(A) = q.
void pin_target_output(Agent& agent, const std::vector<double>& q) {
  VectorXd& p = agent.mutable_online();
  const double mean = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
  for (const auto& b : agent.network().blocks()) {
    if (b.name == "value.w" || b.name == "advantage.w") p.segment(b.offset, b.rows * b.cols).setZero();
    if (b.name == "value.b") p(b.offset) = mean;
    if (b.name == "advantage.b")
      for (std::size_t a = 0; a < q.size(); ++a) p(b.offset + static_cast<Eigen::Index>(a)) = q[a] - mean;
  }
  agent.sync_target();
}

}  // namespace

TEST(Features, NormalizedPerEpisode) {
  const Topology t = generate_topology(12, 3, 1000.0, 1);
  std::vector<DeviceId> order(12);
  std::iota(order.begin(), order.end(), 0);
  for (bool joint : {false, true}) {
    const MatrixXd f = episode_features(t, order, joint);
    ASSERT_EQ(f.rows(), 12);
    ASSERT_EQ(f.cols(), 6);
    EXPECT_GE(f.minCoeff(), 0.0);
    EXPECT_LE(f.maxCoeff(), 1.0);
    for (Eigen::Index c = 3; c < 6; ++c) {
      EXPECT_DOUBLE_EQ(f.col(c).minCoeff(), 0.0);
      EXPECT_DOUBLE_EQ(f.col(c).maxCoeff(), 1.0);
    }
  }
  // the strongest gain to edge 0 gets the largest normalized value
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < 12; ++i)
    if (t.channel.gain(static_cast<std::size_t>(i), 0) > t.channel.gain(static_cast<std::size_t>(best), 0)) best = i;
  EXPECT_DOUBLE_EQ(episode_features(t, order).col(0).maxCoeff(), episode_features(t, order)(best, 0));
}

TEST(Features, FlatColumnIsZero) {
  Topology t = generate_topology(4, 2, 1000.0, 2);
  for (auto& d : t.devices) d.num_samples = 500;
  const MatrixXd f = episode_features(t, {0, 1, 2, 3});
  EXPECT_EQ(f.col(3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(QNetwork, BlocksCoverParameters) {
  const QNetwork net(small_config());
  Eigen::Index total = 0;
  for (const auto& b : net.blocks()) {
    EXPECT_EQ(b.offset, total);
    total += b.rows * b.cols;
  }
  EXPECT_EQ(total, net.parameter_count());
}

TEST(QNetwork, DuelingIdentity) {
  const AgentConfig c = small_config(4, 6, 8);
  const QNetwork net(c);
  const VectorXd p = net.init(1);
  const QOutput out = net.forward(p, all_states(c, 2));
  for (Eigen::Index j = 0; j < out.q.cols(); ++j) {
    EXPECT_NEAR(out.q.col(j).mean(), out.value(j), 1e-9);
    const double centered = out.advantage.col(j).mean();
    for (Eigen::Index a = 0; a < out.q.rows(); ++a)
      EXPECT_NEAR(out.q(a, j), out.value(j) + out.advantage(a, j) - centered, 1e-12);
  }
}

TEST(QNetwork, EqualAdvantagesGiveValue) {
  Agent agent(small_config());
  pin_target_output(agent, {0.3, 0.3, 0.3});
  const auto states = all_states(agent.config(), 4);
  const QOutput out = agent.network().forward(agent.online(), states);
  for (Eigen::Index j = 0; j < out.q.cols(); ++j)
    for (Eigen::Index a = 0; a < 3; ++a) EXPECT_NEAR(out.q(a, j), out.value(j), 1e-15);
}

TEST(QNetwork, BatchMatchesSingleStates) {
  const AgentConfig c = small_config(3, 7, 8);
  const QNetwork net(c);
  const VectorXd p = net.init(5);
  auto states = all_states(c, 6);
  std::swap(states[0], states[4]);
  const MatrixXd batch = net.forward(p, states).q;
  for (std::size_t j = 0; j < states.size(); ++j) {
    const MatrixXd one = net.forward(p, {states[j]}).q;
    EXPECT_NEAR((batch.col(static_cast<Eigen::Index>(j)) - one.col(0)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(QNetwork, Deterministic) {
  Agent a(small_config());
  Agent b(small_config());
  const State s = all_states(a.config(), 7)[2];
  EXPECT_EQ(a.q_values(s), a.q_values(s));
  EXPECT_EQ(a.q_values(s), b.q_values(s));
}

TEST(QNetwork, GradientMatchesFiniteDifferences) {
  const AgentConfig c = small_config(3, 5, 8);
  const QNetwork net(c);
  const VectorXd p = net.init(9);
  std::vector<State> states = all_states(c, 10);
  const auto more = all_states(c, 11);
  states.insert(states.end(), more.begin(), more.end());
  std::vector<std::size_t> actions;
  for (std::size_t j = 0; j < states.size(); ++j) actions.push_back(j % 3);
  VectorXd y(static_cast<Eigen::Index>(states.size()));
  for (Eigen::Index j = 0; j < y.size(); ++j) y(j) = (j % 2 ? 1.0 : -1.0) * 0.7;

  VectorXd grad;
  net.loss(p, states, actions, y, &grad);
  const double eps = 1e-6;
  for (const auto& b : net.blocks()) {
    double worst = 0.0;
    for (Eigen::Index k = b.offset; k < b.offset + b.rows * b.cols; ++k) {
      VectorXd hi = p, lo = p;
      hi(k) += eps;
      lo(k) -= eps;
      const double fd = (net.loss(hi, states, actions, y, nullptr) - net.loss(lo, states, actions, y, nullptr)) / (2 * eps);
      worst = std::max(worst, std::abs(grad(k) - fd) / std::max(1e-3, std::abs(fd)));
    }
    EXPECT_LT(worst, 1e-4) << b.name;
  }
}

TEST(Agent, GreedyActionAndTies) {
  Agent agent(small_config());
  VectorXd q(3);
  q << 0.1, 0.9, 0.3;
  EXPECT_EQ(agent.greedy_action(q), 1u);
  q.setConstant(0.4);
  EXPECT_EQ(agent.greedy_action(q), 0u);
  pin_target_output(agent, {0.2, 0.2, 0.2});
  Rng rng(1);
  EXPECT_EQ(agent.select_action(all_states(agent.config(), 1)[0], 0.0, rng), 0u);
}

TEST(Agent, UniformExploration) {
  Agent agent(small_config());
  const State s = all_states(agent.config(), 2)[1];
  Rng rng(12);
  const int n = 10000;
  std::vector<int> count(3, 0);
  for (int i = 0; i < n; ++i) ++count[agent.select_action(s, 1.0, rng)];
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : count) EXPECT_LT(std::abs(c - n * p), 3 * sigma);
  EXPECT_THROW(agent.select_action(s, 1.5, rng), ContractViolation);
}

TEST(Agent, TdTargets) {
  AgentConfig c = small_config(2, 4, 8);
  c.gamma = 0.99;
  Agent agent(c);
  pin_target_output(agent, {0.2, 0.5});
  const auto states = all_states(c, 3);
  Transition terminal{states[3], 0, 1.0, std::nullopt};
  Transition mid{states[1], 1, -1.0, states[2]};
  const VectorXd y = agent.td_targets({&terminal, &mid});
  EXPECT_DOUBLE_EQ(y(0), 1.0);
  EXPECT_NEAR(y(1), -0.505, 1e-12);

  c.gamma = 0.0;
  Agent myopic(c);
  const VectorXd y0 = myopic.td_targets({&terminal, &mid});
  EXPECT_EQ(y0(1), -1.0);
}

TEST(Agent, TargetsIgnoreOnlineUpdates) {
  AgentConfig c = small_config();
  c.learning_rate = 0.05;
  Agent agent(c);
  const auto states = all_states(c, 4);
  std::vector<Transition> ts;
  for (std::size_t t = 0; t + 1 < states.size(); ++t) ts.push_back({states[t], t % 3, 1.0, states[t + 1]});
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  const VectorXd before = agent.td_targets(batch);
  for (int i = 0; i < 5; ++i) agent.update(batch);
  EXPECT_NE(agent.online(), agent.target());
  EXPECT_EQ(agent.td_targets(batch), before);
}

TEST(Agent, ZeroErrorGivesZeroGradient) {
  Agent agent(small_config());
  const auto states = all_states(agent.config(), 5);
  const MatrixXd q = agent.network().forward(agent.online(), states).q;
  std::vector<std::size_t> actions;
  VectorXd y(static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    actions.push_back(j % 3);
    y(static_cast<Eigen::Index>(j)) = q(static_cast<Eigen::Index>(j % 3), static_cast<Eigen::Index>(j));
  }
  VectorXd grad;
  EXPECT_LT(agent.network().loss(agent.online(), states, actions, y, &grad), 1e-30);
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Agent, OverfitsFixedBatch) {
  AgentConfig c = small_config(3, 6, 8);
  c.learning_rate = 1e-2;
  Agent agent(c);
  const auto states = all_states(c, 6);
  std::vector<Transition> ts;
  for (std::size_t t = 0; t < states.size(); ++t) ts.push_back({states[t], t % 3, t % 2 ? 1.0 : -1.0, std::nullopt});
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  double prev = agent.update(batch);
  const double first = prev;
  for (int i = 0; i < 300; ++i) {
    const double loss = agent.update(batch);
    EXPECT_LT(loss, prev) << "step " << i;
    prev = loss;
  }
  EXPECT_LT(prev, 0.5 * first);
}

TEST(Agent, TrainStepSyncsTargetEveryJ) {
  AgentConfig c = small_config();
  c.target_interval = 3;
  c.learning_rate = 0.05;
  Agent agent(c);
  ReplayBuffer buf(64);
  const auto states = all_states(c, 8);
  Rng rng(2);
  EXPECT_THROW(agent.train_step(buf, rng), ContractViolation);
  for (int i = 0; i < 20; ++i) buf.push({states[static_cast<std::size_t>(i) % 5], static_cast<std::size_t>(i) % 3, 1.0, std::nullopt});
  agent.train_step(buf, rng);
  agent.train_step(buf, rng);
  EXPECT_NE(agent.online(), agent.target());
  agent.train_step(buf, rng);
  EXPECT_EQ(agent.online(), agent.target());
  EXPECT_EQ(agent.steps(), 3u);
}

TEST(Replay, FifoEvictionAndCapacity) {
  ReplayBuffer buf(4);
  const auto f = random_features(small_config(), 1);
  for (std::size_t i = 0; i < 7; ++i) {
    buf.push({State{f, 0}, i % 3, static_cast<double>(i), std::nullopt});
    EXPECT_LE(buf.size(), 4u);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(buf.at(i).reward, static_cast<double>(i + 3));
}

TEST(Replay, SamplesWithoutReplacement) {
  ReplayBuffer buf(50);
  const auto f = random_features(small_config(), 1);
  for (std::size_t i = 0; i < 50; ++i) buf.push({State{f, 0}, 0, static_cast<double>(i), std::nullopt});
  Rng rng(4);
  std::vector<int> hits(50, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = buf.sample(10, rng);
    std::set<const Transition*> distinct(s.begin(), s.end());
    ASSERT_EQ(distinct.size(), 10u);
    for (const auto* t : s) ++hits[static_cast<std::size_t>(t->reward)];
  }
  // each item expected 400 times; binomial sd about 18
  for (int h : hits) EXPECT_NEAR(h, 400, 90);
}

TEST(Reward, Imitation) {
  AssignmentPattern p(3);
  p.groups = {{0, 4}, {1}, {2, 3}};
  EXPECT_EQ(imitation_reward(2, p, 3), 1.0);
  EXPECT_EQ(imitation_reward(0, p, 3), -1.0);
  EXPECT_THROW(imitation_reward(0, p, 9), ContractViolation);
}

TEST(Training, SingleEdgeReturnIsHorizon) {
  TrainConfig tc;
  tc.agent = small_config(1, 5, 4);
  tc.episodes = 6;
  tc.seed = 2;
  const Topology base = generate_topology(5, 1, 1000.0, 3);
  std::vector<double> returns;
  const TrainResult r = train_agent(tc, base, [&](const EpisodeStats& s) { returns.push_back(s.episode_return); });
  ASSERT_EQ(returns.size(), 6u);
  for (double ret : returns) EXPECT_EQ(ret, 5.0);
  EXPECT_EQ(r.curve.size(), 6u);
}

TEST(Training, BitwiseReproducible) {
  TrainConfig tc;
  tc.agent = small_config(2, 4, 4);
  tc.episodes = 8;
  tc.seed = 5;
  const Topology base = generate_topology(6, 2, 1000.0, 4);
  const TrainResult a = train_agent(tc, base);
  const TrainResult b = train_agent(tc, base);
  EXPECT_EQ(a.agent.online(), b.agent.online());
  EXPECT_EQ(a.agent.target(), b.agent.target());
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(curve_csv_row(a.curve[i]), curve_csv_row(b.curve[i]));
  EXPECT_GT(a.agent.steps(), 0u);
}

TEST(Training, EpsilonSchedule) {
  TrainConfig tc;
  tc.episodes = 100;
  EXPECT_DOUBLE_EQ(epsilon_at(tc, 0), 1.0);
  EXPECT_NEAR(epsilon_at(tc, 15), 0.525, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(tc, 30), 0.05);
  EXPECT_DOUBLE_EQ(epsilon_at(tc, 99), 0.05);
  tc.greedy_only = true;
  EXPECT_EQ(epsilon_at(tc, 0), 0.0);
}

TEST(Checkpoint, RoundTrip) {
  TrainConfig tc;
  tc.agent = small_config(2, 4, 4);
  tc.agent.optimizer = Optimizer::kAdam;
  tc.agent.joint_gains = true;
  tc.episodes = 5;
  const Topology base = generate_topology(6, 2, 1000.0, 4);
  const TrainResult r = train_agent(tc, base);
  const auto path = (std::filesystem::temp_directory_path() / "hfl_agent_roundtrip.bin").string();
  r.agent.save(path);
  const Agent back = Agent::load(path);
  EXPECT_EQ(back.online(), r.agent.online());
  EXPECT_EQ(back.target(), r.agent.target());
  EXPECT_EQ(back.steps(), r.agent.steps());
  EXPECT_EQ(back.config().horizon, 4u);
  EXPECT_EQ(back.config().optimizer, Optimizer::kAdam);
  EXPECT_TRUE(back.config().joint_gains);
  std::filesystem::remove(path);
  EXPECT_THROW(Agent::load(path), ConfigError);
}

TEST(Checkpoint, RejectsForeignFile) {
  const auto path = (std::filesystem::temp_directory_path() / "hfl_not_an_agent.bin").string();
  write_file_atomic(path, "definitely not a checkpoint");
  EXPECT_THROW(Agent::load(path), ConfigError);
  std::filesystem::remove(path);
}

TEST(DrlAssign, ValidPatternAndShapeChecks) {
  Agent agent(small_config(3, 6, 8));
  const Topology t = generate_topology(10, 3, 1000.0, 5);
  const std::vector<DeviceId> sched{1, 2, 4, 5, 7, 9};
  const AssignmentOutcome o = assign_drl(agent, sched, t, CostParams{});
  EXPECT_NO_THROW(o.pattern.validate(sched));
  EXPECT_GT(o.objective, 0.0);
  EXPECT_THROW(drl_pattern(agent, {1, 2, 3}, t), ConfigError);
  const Topology two = generate_topology(10, 2, 1000.0, 5);
  EXPECT_THROW(drl_pattern(agent, sched, two), ConfigError);
}
