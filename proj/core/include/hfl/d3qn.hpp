// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfl/assigner.hpp"
#include "hfl/cost.hpp"
#include "hfl/lstm.hpp"
#include "hfl/topology.hpp"

namespace hfl {

/// Per-device features for one episode: row t holds the min-max normalized
/// (gain_1..gain_M in dB, cycles per sample, samples, power in dBm) of the
/// t-th device in `order`. Each column is scaled over the episode on its own;
/// with `joint_gains` the M gain columns share one min and max. A column with
/// no spread maps to 0.
Eigen::MatrixXd episode_features(const Topology& topo, const std::vector<DeviceId>& order, bool joint_gains = false);

/// State s_t of an episode: the forward half is rows [0, t], the backward
/// half rows [t, H). `step` is zero-based.
struct State {
  std::shared_ptr<const Eigen::MatrixXd> features;
  std::size_t step = 0;

  std::size_t horizon() const { return static_cast<std::size_t>(features->rows()); }
};

struct Transition {
  State state;
  std::size_t action = 0;
  double reward = 0.0;
  std::optional<State> next;  // empty when terminal
};

/// FIFO ring buffer with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }  // 0 = oldest
  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

enum class Optimizer { kSgd, kAdam };

struct AgentConfig {
  std::size_t edges = 3;      // M
  std::size_t horizon = 20;   // H
  std::size_t hidden = 32;    // recurrent width per direction
  std::size_t shared = 64;    // width of the shared dense layer
  double gamma = 0.99;
  double learning_rate = 1e-3;
  double grad_clip = 10.0;
  Optimizer optimizer = Optimizer::kSgd;
  std::size_t target_interval = 200;  // J
  std::size_t batch = 128;            // O
  std::size_t replay_capacity = 50000;
  bool joint_gains = false;  // see episode_features
  std::uint64_t seed = 0;

  std::size_t feature_dim() const { return edges + 3; }
  void validate() const;
};

/// Network evaluation for a batch of states; exposes the value and the
/// advantage heads next to the combined Q-values.
struct QOutput {
  Eigen::MatrixXd q;          // M x batch
  Eigen::RowVectorXd value;   // 1 x batch
  Eigen::MatrixXd advantage;  // M x batch
};

/// Bidirectional recurrent encoder, a shared ReLU layer, and the dueling
/// heads. Parameters are one flat vector.
class QNetwork {
 public:
  explicit QNetwork(const AgentConfig& config);

  Eigen::Index parameter_count() const { return total_; }
  Eigen::VectorXd init(std::uint64_t seed) const;

  QOutput forward(const Eigen::VectorXd& params, const std::vector<State>& states) const;
  /// Mean squared TD error over (state, action, target) triples; writes the
  /// parameter gradient when `grad` is non-null.
  double loss(const Eigen::VectorXd& params, const std::vector<State>& states, const std::vector<std::size_t>& actions,
              const Eigen::VectorXd& targets, Eigen::VectorXd* grad) const;

  /// Names, offsets and shapes of the parameter blocks, in storage order.
  struct Block {
    std::string name;
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  struct Encoded;
  Encoded encode(const Eigen::VectorXd& params, const std::vector<State>& states, bool keep_tape) const;

  AgentConfig config_;
  Lstm fwd_;
  Lstm bwd_;
  Eigen::Index m_, f_, in_, w_;
  Eigen::Index off_fwd_, off_bwd_, off_shared_w_, off_shared_b_, off_v_w_, off_v_b_, off_a_w_, off_a_b_, total_;
  std::vector<Block> blocks_;
};

class Agent {
 public:
  explicit Agent(const AgentConfig& config);

  const AgentConfig& config() const { return config_; }
  const QNetwork& network() const { return net_; }
  const Eigen::VectorXd& online() const { return online_; }
  const Eigen::VectorXd& target() const { return target_; }
  Eigen::VectorXd& mutable_online() { return online_; }
  std::size_t steps() const { return steps_; }

  Eigen::VectorXd q_values(const State& state) const;
  /// epsilon-greedy: argmax with ties to the lowest edge id, else a uniform edge.
  std::size_t select_action(const State& state, double epsilon, Rng& rng) const;
  std::size_t greedy_action(const Eigen::VectorXd& q) const;

  /// r for terminal transitions, r + gamma * max_a Q_target(s', a) otherwise.
  Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch) const;
  /// One gradient step on a sampled minibatch. Counts a step and syncs the
  /// target network every `target_interval` steps. Requires size > batch.
  double train_step(const ReplayBuffer& buffer, Rng& rng);
  /// Same update on a fixed minibatch (no target sync, no step count).
  double update(const std::vector<const Transition*>& batch);
  void sync_target() { target_ = online_; }

  void save(const std::string& path) const;
  static Agent load(const std::string& path);

 private:
  AgentConfig config_;
  QNetwork net_;
  Eigen::VectorXd online_;
  Eigen::VectorXd target_;
  Eigen::VectorXd adam_m_;
  Eigen::VectorXd adam_v_;
  std::size_t adam_t_ = 0;
  std::size_t steps_ = 0;
};

/// +1 when HFEL put `device` on edge `action`, else -1.
double imitation_reward(std::size_t action, const AssignmentPattern& hfel, DeviceId device);

struct EpisodeStats {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double mean_loss = 0.0;  // NaN before the buffer warms up
  double epsilon = 0.0;
  double agreement = 0.0;  // fraction of steps matching HFEL
};

struct TrainConfig {
  AgentConfig agent;
  std::size_t episodes = 2000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.3;  // of episodes over which epsilon decays
  bool greedy_only = false;
  bool shuffle_order = false;  // visit devices in a seeded order instead of by id
  AssignmentStrategy hfel;
  double tolerance = 1e-4;
  TopologyRanges ranges;
  CostParams params;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Agent agent;
  std::vector<EpisodeStats> curve;
};

double epsilon_at(const TrainConfig& config, std::size_t episode);

/// Episodes draw fresh devices against the edge layout of `base`, label them
/// with HFEL, and roll the agent over the H devices.
TrainResult train_agent(const TrainConfig& config, const Topology& base,
                        const std::function<void(const EpisodeStats&)>& on_episode = {});

/// Greedy rollout over the schedule (ascending device id). The wall time
/// covers the rollout only; cost fields come from allocating the pattern.
AssignmentOutcome assign_drl(const Agent& agent, const std::vector<DeviceId>& schedule, const Topology& topo,
                             const CostParams& params, double tolerance = 1e-4);
AssignmentPattern drl_pattern(const Agent& agent, const std::vector<DeviceId>& schedule, const Topology& topo);

std::string curve_csv_header();
std::string curve_csv_row(const EpisodeStats& stats);

}  // namespace hfl
