// SPDX-License-Identifier: Apache-2.0
#include "hfl/d3qn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "hfl/csv.hpp"
#include "hfl/error.hpp"

namespace hfl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

Eigen::MatrixXd episode_features(const Topology& topo, const std::vector<DeviceId>& order, bool joint_gains) {
  const std::size_t m = topo.num_edges();
  MatrixXd raw(static_cast<Index>(order.size()), static_cast<Index>(m + 3));
  for (std::size_t t = 0; t < order.size(); ++t) {
    const Device& dev = topo.devices.at(order[t]);
    const auto r = static_cast<Index>(t);
    for (std::size_t e = 0; e < m; ++e) raw(r, static_cast<Index>(e)) = 10.0 * std::log10(topo.channel.gain(dev.id, e));
    raw(r, static_cast<Index>(m)) = dev.cycles_per_sample;
    raw(r, static_cast<Index>(m + 1)) = static_cast<double>(dev.num_samples);
    raw(r, static_cast<Index>(m + 2)) = watts_to_dbm(dev.tx_power_w);
  }
  auto scale = [](auto block) {
    const double lo = block.minCoeff();
    const double span = block.maxCoeff() - lo;
    if (span > 0.0) {
      block = ((block.array() - lo) / span).min(1.0).max(0.0).matrix();
    } else {
      block.setZero();
    }
  };
  const auto gains = static_cast<Index>(m);
  if (joint_gains) {
    scale(raw.leftCols(gains));
  } else {
    for (Index c = 0; c < gains; ++c) scale(raw.col(c));
  }
  for (Index c = gains; c < raw.cols(); ++c) scale(raw.col(c));
  return raw;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (count > items_.size()) throw ContractViolation("replay buffer: sample larger than buffer");
  // Floyd's algorithm: distinct indices in O(count).
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> picks;
  picks.reserve(count);
  const std::size_t n = items_.size();
  for (std::size_t j = n - count; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> u(0, j);
    std::size_t r = u(rng);
    if (!chosen.insert(r).second) {
      r = j;
      chosen.insert(r);
    }
    picks.push_back(r);
  }
  std::vector<const Transition*> out;
  out.reserve(count);
  for (std::size_t i : picks) out.push_back(&items_[i]);
  return out;
}

void AgentConfig::validate() const {
  if (edges < 1) throw ConfigError("agent: need at least one edge");
  if (horizon < 1) throw ConfigError("agent: horizon must be >= 1");
  if (hidden < 1 || shared < 1) throw ConfigError("agent: layer widths must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent: gamma must lie in [0,1]");
  if (!(learning_rate > 0.0)) throw ConfigError("agent: learning rate must be > 0");
  if (!(grad_clip > 0.0)) throw ConfigError("agent: gradient clip must be > 0");
  if (target_interval < 1 || batch < 1) throw ConfigError("agent: target interval and batch must be >= 1");
  if (replay_capacity <= batch) throw ConfigError("agent: replay capacity must exceed the batch size");
}

struct QNetwork::Encoded {
  MatrixXd enc;     // 2w x batch
  MatrixXd z;       // f x batch, pre-activation
  MatrixXd act;     // f x batch
  Lstm::Tape tape_f;
  Lstm::Tape tape_b;
  std::vector<Index> order;  // encoder column j holds state order[j]
};

QNetwork::QNetwork(const AgentConfig& config)
    : config_(config),
      fwd_(static_cast<Index>(config.feature_dim()), static_cast<Index>(config.hidden)),
      bwd_(static_cast<Index>(config.feature_dim()), static_cast<Index>(config.hidden)) {
  config_.validate();
  m_ = static_cast<Index>(config.edges);
  f_ = static_cast<Index>(config.shared);
  in_ = static_cast<Index>(config.feature_dim());
  w_ = static_cast<Index>(config.hidden);
  Index off = 0;
  auto add = [&](const std::string& name, Index rows, Index cols) {
    blocks_.push_back({name, off, rows, cols});
    const Index start = off;
    off += rows * cols;
    return start;
  };
  off_fwd_ = add("lstm_fwd.w", 4 * w_, in_ + w_);
  add("lstm_fwd.b", 4 * w_, 1);
  off_bwd_ = add("lstm_bwd.w", 4 * w_, in_ + w_);
  add("lstm_bwd.b", 4 * w_, 1);
  off_shared_w_ = add("shared.w", f_, 2 * w_);
  off_shared_b_ = add("shared.b", f_, 1);
  off_v_w_ = add("value.w", 1, f_);
  off_v_b_ = add("value.b", 1, 1);
  off_a_w_ = add("advantage.w", m_, f_);
  off_a_b_ = add("advantage.b", m_, 1);
  total_ = off;
}

VectorXd QNetwork::init(std::uint64_t seed) const {
  Rng rng = make_rng(seed, Stream::kNetworkInit);
  VectorXd p = VectorXd::Zero(total_);
  fwd_.init(p.data() + off_fwd_, rng);
  bwd_.init(p.data() + off_bwd_, rng);
  std::normal_distribution<double> shared(0.0, std::sqrt(2.0 / static_cast<double>(2 * w_)));
  for (Index i = 0; i < f_ * 2 * w_; ++i) p(off_shared_w_ + i) = shared(rng);
  std::normal_distribution<double> head(0.0, 1.0 / std::sqrt(static_cast<double>(f_)));
  for (Index i = 0; i < f_; ++i) p(off_v_w_ + i) = head(rng);
  for (Index i = 0; i < m_ * f_; ++i) p(off_a_w_ + i) = head(rng);
  return p;
}

QNetwork::Encoded QNetwork::encode(const VectorXd& params, const std::vector<State>& states, bool keep_tape) const {
  if (params.size() != total_) throw ContractViolation("q-network: parameter vector has the wrong size");
  const auto batch = static_cast<Index>(states.size());
  const std::size_t horizon = config_.horizon;
  for (const auto& s : states) {
    if (!s.features || s.horizon() != horizon || s.features->cols() != in_ || s.step >= horizon) {
      throw ContractViolation("q-network: malformed state");
    }
  }
  std::vector<MatrixXd> xf(horizon, MatrixXd::Zero(in_, batch));
  std::vector<MatrixXd> xb(horizon, MatrixXd::Zero(in_, batch));
  std::vector<RowVectorXd> mf(horizon, RowVectorXd::Zero(batch));
  std::vector<RowVectorXd> mb(horizon, RowVectorXd::Zero(batch));
  // Columns ordered by decreasing step make each direction's active columns
  // contiguous at every time step.
  Encoded e;
  e.order.resize(static_cast<std::size_t>(batch));
  std::iota(e.order.begin(), e.order.end(), Index{0});
  std::stable_sort(e.order.begin(), e.order.end(), [&](Index a, Index b) {
    return states[static_cast<std::size_t>(a)].step > states[static_cast<std::size_t>(b)].step;
  });
  for (Index j = 0; j < batch; ++j) {
    const State& st = states[static_cast<std::size_t>(e.order[static_cast<std::size_t>(j)])];
    const MatrixXd& feat = *st.features;
    const std::size_t t = st.step;
    // Forward half rows 0..t, left-padded to the horizon.
    const std::size_t pad_f = horizon - (t + 1);
    for (std::size_t k = pad_f; k < horizon; ++k) {
      xf[k].col(j) = feat.row(static_cast<Index>(k - pad_f)).transpose();
      mf[k](j) = 1.0;
    }
    // Backward half rows H-1 down to t.
    for (std::size_t k = t; k < horizon; ++k) {
      xb[k].col(j) = feat.row(static_cast<Index>(horizon - 1 - (k - t))).transpose();
      mb[k](j) = 1.0;
    }
  }
  MatrixXd sorted(2 * w_, batch);
  sorted.topRows(w_) = fwd_.forward(params.data() + off_fwd_, xf, mf, keep_tape ? &e.tape_f : nullptr);
  sorted.bottomRows(w_) = bwd_.forward(params.data() + off_bwd_, xb, mb, keep_tape ? &e.tape_b : nullptr);
  e.enc.resize(2 * w_, batch);
  for (Index j = 0; j < batch; ++j) e.enc.col(e.order[static_cast<std::size_t>(j)]) = sorted.col(j);
  Eigen::Map<const MatrixXd> ws(params.data() + off_shared_w_, f_, 2 * w_);
  Eigen::Map<const VectorXd> bs(params.data() + off_shared_b_, f_);
  e.z = (ws * e.enc).colwise() + bs;
  e.act = e.z.cwiseMax(0.0);
  return e;
}

QOutput QNetwork::forward(const VectorXd& params, const std::vector<State>& states) const {
  const Encoded e = encode(params, states, false);
  Eigen::Map<const RowVectorXd> wv(params.data() + off_v_w_, f_);
  Eigen::Map<const MatrixXd> wa(params.data() + off_a_w_, m_, f_);
  Eigen::Map<const VectorXd> ba(params.data() + off_a_b_, m_);
  QOutput out;
  out.value = (wv * e.act).array() + params(off_v_b_);
  out.advantage = (wa * e.act).colwise() + ba;
  const RowVectorXd mean_a = out.advantage.colwise().mean();
  out.q = out.advantage;
  out.q.rowwise() += out.value - mean_a;
  return out;
}

double QNetwork::loss(const VectorXd& params, const std::vector<State>& states, const std::vector<std::size_t>& actions,
                      const VectorXd& targets, VectorXd* grad) const {
  const auto batch = static_cast<Index>(states.size());
  if (batch == 0 || actions.size() != states.size() || targets.size() != batch) {
    throw ContractViolation("q-network: minibatch sizes differ");
  }
  Encoded e = encode(params, states, grad != nullptr);
  Eigen::Map<const RowVectorXd> wv(params.data() + off_v_w_, f_);
  Eigen::Map<const MatrixXd> wa(params.data() + off_a_w_, m_, f_);
  Eigen::Map<const VectorXd> ba(params.data() + off_a_b_, m_);
  const RowVectorXd value = (wv * e.act).array() + params(off_v_b_);
  const MatrixXd adv = (wa * e.act).colwise() + ba;
  const RowVectorXd mean_a = adv.colwise().mean();

  double loss = 0.0;
  MatrixXd dq = MatrixXd::Zero(m_, batch);
  for (Index j = 0; j < batch; ++j) {
    const auto a = static_cast<Index>(actions[static_cast<std::size_t>(j)]);
    if (a >= m_) throw ContractViolation("q-network: action out of range");
    const double q = value(j) + adv(a, j) - mean_a(j);
    const double err = targets(j) - q;
    loss += err * err;
    dq(a, j) = -2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!grad) return loss;

  grad->setZero(total_);
  const RowVectorXd dv = dq.colwise().sum();
  MatrixXd da = dq;
  da.rowwise() -= dv / static_cast<double>(m_);
  Eigen::Map<RowVectorXd>(grad->data() + off_v_w_, f_) = dv * e.act.transpose();
  (*grad)(off_v_b_) = dv.sum();
  Eigen::Map<MatrixXd>(grad->data() + off_a_w_, m_, f_) = da * e.act.transpose();
  Eigen::Map<VectorXd>(grad->data() + off_a_b_, m_) = da.rowwise().sum();

  MatrixXd dact = wv.transpose() * dv + wa.transpose() * da;
  dact.array() *= (e.z.array() > 0.0).cast<double>();
  Eigen::Map<const MatrixXd> ws(params.data() + off_shared_w_, f_, 2 * w_);
  Eigen::Map<MatrixXd>(grad->data() + off_shared_w_, f_, 2 * w_) = dact * e.enc.transpose();
  Eigen::Map<VectorXd>(grad->data() + off_shared_b_, f_) = dact.rowwise().sum();
  const MatrixXd denc = ws.transpose() * dact;
  MatrixXd dsorted(2 * w_, batch);
  for (Index j = 0; j < batch; ++j) dsorted.col(j) = denc.col(e.order[static_cast<std::size_t>(j)]);
  fwd_.backward(params.data() + off_fwd_, e.tape_f, dsorted.topRows(w_), grad->data() + off_fwd_);
  bwd_.backward(params.data() + off_bwd_, e.tape_b, dsorted.bottomRows(w_), grad->data() + off_bwd_);
  return loss;
}

Agent::Agent(const AgentConfig& config) : config_(config), net_(config) {
  online_ = net_.init(config.seed);
  target_ = online_;
  adam_m_ = VectorXd::Zero(online_.size());
  adam_v_ = VectorXd::Zero(online_.size());
}

VectorXd Agent::q_values(const State& state) const { return net_.forward(online_, {state}).q.col(0); }

std::size_t Agent::greedy_action(const VectorXd& q) const {
  std::size_t best = 0;
  for (Index a = 1; a < q.size(); ++a) {
    if (q(a) > q(static_cast<Index>(best))) best = static_cast<std::size_t>(a);
  }
  return best;
}

std::size_t Agent::select_action(const State& state, double epsilon, Rng& rng) const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractViolation("select_action: epsilon outside [0,1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, config_.edges - 1);
    return pick(rng);
  }
  return greedy_action(q_values(state));
}

VectorXd Agent::td_targets(const std::vector<const Transition*>& batch) const {
  VectorXd y(static_cast<Index>(batch.size()));
  std::vector<State> next;
  std::vector<Index> slot;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    y(static_cast<Index>(j)) = batch[j]->reward;
    if (batch[j]->next) {
      next.push_back(*batch[j]->next);
      slot.push_back(static_cast<Index>(j));
    }
  }
  if (!next.empty() && config_.gamma > 0.0) {
    const MatrixXd q = net_.forward(target_, next).q;
    for (std::size_t k = 0; k < slot.size(); ++k) {
      y(slot[k]) += config_.gamma * q.col(static_cast<Index>(k)).maxCoeff();
    }
  }
  return y;
}

double Agent::update(const std::vector<const Transition*>& batch) {
  const VectorXd y = td_targets(batch);
  std::vector<State> states;
  std::vector<std::size_t> actions;
  states.reserve(batch.size());
  actions.reserve(batch.size());
  for (const auto* t : batch) {
    states.push_back(t->state);
    actions.push_back(t->action);
  }
  VectorXd grad;
  const double loss = net_.loss(online_, states, actions, y, &grad);
  if (!std::isfinite(loss) || !grad.allFinite()) throw NumericalError("d3qn: non-finite loss or gradient");
  const double norm = grad.norm();
  if (norm > config_.grad_clip) grad *= config_.grad_clip / norm;
  if (config_.optimizer == Optimizer::kSgd) {
    online_ -= config_.learning_rate * grad;
  } else {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam_t_;
    adam_m_ = b1 * adam_m_ + (1.0 - b1) * grad;
    adam_v_ = b2 * adam_v_ + (1.0 - b2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    online_.array() -= config_.learning_rate * (adam_m_.array() / c1) / ((adam_v_.array() / c2).sqrt() + eps);
  }
  return loss;
}

double Agent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  if (buffer.size() <= config_.batch) throw ContractViolation("train_step: replay buffer not warm");
  const double loss = update(buffer.sample(config_.batch, rng));
  ++steps_;
  if (steps_ % config_.target_interval == 0) sync_target();
  return loss;
}

namespace {

constexpr char kMagic[8] = {'H', 'F', 'L', 'D', '3', 'Q', 'N', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("checkpoint: truncated file");
  return v;
}

}  // namespace

void Agent::save(const std::string& path) const {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  for (std::size_t v : {config_.edges, config_.horizon, config_.hidden, config_.shared, config_.target_interval,
                        config_.batch, config_.replay_capacity}) {
    put<std::uint64_t>(out, v);
  }
  put<std::uint8_t>(out, config_.optimizer == Optimizer::kAdam ? 1 : 0);
  put<std::uint8_t>(out, config_.joint_gains ? 1 : 0);
  put<double>(out, config_.gamma);
  put<double>(out, config_.learning_rate);
  put<double>(out, config_.grad_clip);
  put<std::uint64_t>(out, config_.seed);
  put<std::uint64_t>(out, steps_);
  const auto& blocks = net_.blocks();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(2 * blocks.size()));
  for (const auto* which : {&online_, &target_}) {
    const std::string prefix = which == &online_ ? "online/" : "target/";
    for (const auto& b : blocks) {
      const std::string name = prefix + b.name;
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::int64_t>(out, b.rows);
      put<std::int64_t>(out, b.cols);
      out.write(reinterpret_cast<const char*>(which->data() + b.offset),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.rows * b.cols)));
    }
  }
  write_file_atomic(path, out.str());
}

Agent Agent::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("checkpoint: bad magic in " + path);
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  AgentConfig c;
  c.edges = get<std::uint64_t>(in);
  c.horizon = get<std::uint64_t>(in);
  c.hidden = get<std::uint64_t>(in);
  c.shared = get<std::uint64_t>(in);
  c.target_interval = get<std::uint64_t>(in);
  c.batch = get<std::uint64_t>(in);
  c.replay_capacity = get<std::uint64_t>(in);
  c.optimizer = get<std::uint8_t>(in) ? Optimizer::kAdam : Optimizer::kSgd;
  c.joint_gains = get<std::uint8_t>(in) != 0;
  c.gamma = get<double>(in);
  c.learning_rate = get<double>(in);
  c.grad_clip = get<double>(in);
  c.seed = get<std::uint64_t>(in);
  Agent agent(c);
  agent.steps_ = get<std::uint64_t>(in);
  const auto& blocks = agent.net_.blocks();
  if (get<std::uint32_t>(in) != 2 * blocks.size()) throw ConfigError("checkpoint: tensor count mismatch");
  for (auto* which : {&agent.online_, &agent.target_}) {
    const std::string prefix = which == &agent.online_ ? "online/" : "target/";
    for (const auto& b : blocks) {
      const auto len = get<std::uint32_t>(in);
      std::string name(len, '\0');
      if (!in.read(name.data(), len)) throw ConfigError("checkpoint: truncated file");
      const auto rows = get<std::int64_t>(in);
      const auto cols = get<std::int64_t>(in);
      if (name != prefix + b.name || rows != b.rows || cols != b.cols) {
        throw ConfigError("checkpoint: unexpected tensor " + name);
      }
      if (!in.read(reinterpret_cast<char*>(which->data() + b.offset),
                   static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows * cols)))) {
        throw ConfigError("checkpoint: truncated file");
      }
    }
  }
  return agent;
}

double imitation_reward(std::size_t action, const AssignmentPattern& hfel, DeviceId device) {
  const EdgeId edge = hfel.edge_of(device);
  if (edge == hfel.num_edges()) throw ContractViolation("reward: device missing from the HFEL pattern");
  return edge == action ? 1.0 : -1.0;
}

double epsilon_at(const TrainConfig& config, std::size_t episode) {
  if (config.greedy_only) return 0.0;
  const double decay = config.epsilon_fraction * static_cast<double>(config.episodes);
  if (decay <= 0.0) return config.epsilon_end;
  const double frac = static_cast<double>(episode) / decay;
  if (frac >= 1.0) return config.epsilon_end;
  return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

TrainResult train_agent(const TrainConfig& config, const Topology& base,
                        const std::function<void(const EpisodeStats&)>& on_episode) {
  AgentConfig ac = config.agent;
  ac.edges = base.num_edges();
  TrainResult result{Agent(ac), {}};
  Agent& agent = result.agent;
  ReplayBuffer buffer(ac.replay_capacity);
  Rng env = make_rng(config.seed, Stream::kEnvironment);
  Rng explore = make_rng(config.seed, Stream::kExploration);
  Rng minibatch = make_rng(config.seed, Stream::kMinibatch);
  AssignmentStrategy hfel = config.hfel;
  hfel.kind = AssignmentKind::kHfel;

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const Topology topo = resample_devices(base, ac.horizon, env, config.ranges);
    std::vector<DeviceId> order(ac.horizon);
    std::iota(order.begin(), order.end(), DeviceId{0});
    const AssignmentPattern label = assign_hfel(order, topo, config.params, hfel, config.tolerance).pattern;
    if (config.shuffle_order) std::shuffle(order.begin(), order.end(), env);
    const auto features = std::make_shared<const MatrixXd>(episode_features(topo, order, ac.joint_gains));

    EpisodeStats stats;
    stats.episode = ep;
    stats.epsilon = epsilon_at(config, ep);
    double loss_sum = 0.0;
    std::size_t updates = 0;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < ac.horizon; ++t) {
      Transition tr;
      tr.state = State{features, t};
      tr.action = agent.select_action(tr.state, stats.epsilon, explore);
      tr.reward = imitation_reward(tr.action, label, order[t]);
      if (t + 1 < ac.horizon) tr.next = State{features, t + 1};
      stats.episode_return += tr.reward;
      hits += tr.reward > 0.0;
      buffer.push(std::move(tr));
      if (buffer.size() > ac.batch) {
        loss_sum += agent.train_step(buffer, minibatch);
        ++updates;
      }
    }
    stats.mean_loss = updates ? loss_sum / static_cast<double>(updates) : std::numeric_limits<double>::quiet_NaN();
    stats.agreement = static_cast<double>(hits) / static_cast<double>(ac.horizon);
    result.curve.push_back(stats);
    if (on_episode) on_episode(stats);
  }
  return result;
}

AssignmentPattern drl_pattern(const Agent& agent, const std::vector<DeviceId>& schedule, const Topology& topo) {
  const AgentConfig& c = agent.config();
  if (schedule.size() != c.horizon) {
    throw ConfigError("assign_drl: schedule has " + std::to_string(schedule.size()) + " devices, agent expects " +
                      std::to_string(c.horizon));
  }
  if (topo.num_edges() != c.edges) throw ConfigError("assign_drl: edge count differs from the trained agent");
  std::vector<DeviceId> order = schedule;
  std::sort(order.begin(), order.end());
  const auto features = std::make_shared<const MatrixXd>(episode_features(topo, order, c.joint_gains));
  std::vector<State> states;
  states.reserve(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) states.push_back(State{features, t});
  const MatrixXd q = agent.network().forward(agent.online(), states).q;
  AssignmentPattern pattern(c.edges);
  for (std::size_t t = 0; t < order.size(); ++t) {
    pattern.groups[agent.greedy_action(q.col(static_cast<Index>(t)))].push_back(order[t]);
  }
  pattern.normalize();
  return pattern;
}

AssignmentOutcome assign_drl(const Agent& agent, const std::vector<DeviceId>& schedule, const Topology& topo,
                             const CostParams& params, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  AssignmentPattern pattern = drl_pattern(agent, schedule, topo);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  AssignmentOutcome out = evaluate_pattern(pattern, topo, params, tolerance);
  out.wall_time_s = wall;
  return out;
}

std::string curve_csv_header() { return csv_line({"episode", "return", "loss", "epsilon", "agreement"}); }

std::string curve_csv_row(const EpisodeStats& s) {
  return csv_line({format_number(s.episode), format_number(s.episode_return), format_number(s.mean_loss),
                   format_number(s.epsilon), format_number(s.agreement)});
}

}  // namespace hfl
