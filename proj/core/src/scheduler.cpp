// SPDX-License-Identifier: Apache-2.0
#include "hfl/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "hfl/csv.hpp"
#include "hfl/error.hpp"

namespace hfl {

namespace {

// Removes `count` uniformly chosen elements from `pool` and returns them.
std::vector<DeviceId> draw(std::vector<DeviceId>& pool, std::size_t count, Rng& rng) {
  std::vector<DeviceId> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t j = pick(rng);
    out.push_back(pool[j]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return out;
}

KMeansResult kmeans_once(const Eigen::MatrixXd& x, const KMeansOptions& opt, Rng& rng) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<Eigen::Index>(opt.k);
  Eigen::MatrixXd centroids(k, x.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = x.row(first(rng));
  Eigen::VectorXd d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    Eigen::Index chosen = 0;
    const double total = d2.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= d2(chosen);
        if (r <= 0.0) break;
      }
    } else {
      chosen = first(rng);
    }
    centroids.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      res.labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<std::size_t> counts(opt.k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(res.labels[static_cast<std::size_t>(i)])) += x.row(i);
      ++counts[res.labels[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        next.row(c) = centroids.row(c);  // keep an emptied centroid in place
      } else {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < opt.tolerance) break;
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    res.inertia += (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    res.labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  res.centroids = std::move(centroids);
  return res;
}

}  // namespace

std::string to_string(SchedulePolicy policy) {
  switch (policy) {
    case SchedulePolicy::kRandom: return "random";
    case SchedulePolicy::kVkc: return "vkc";
    case SchedulePolicy::kIkc: return "ikc";
  }
  return "unknown";
}

SchedulePolicy parse_schedule_policy(const std::string& name) {
  if (name == "random") return SchedulePolicy::kRandom;
  if (name == "vkc") return SchedulePolicy::kVkc;
  if (name == "ikc") return SchedulePolicy::kIkc;
  throw ConfigError("unknown scheduling policy '" + name + "'");
}

ClusterSet ClusterSet::from_labels(const std::vector<std::size_t>& labels, std::size_t k) {
  ClusterSet set;
  set.labels = labels;
  set.clusters.assign(k, {});
  for (DeviceId id = 0; id < labels.size(); ++id) {
    if (labels[id] >= k) throw ContractViolation("cluster label out of range");
    set.clusters[labels[id]].push_back(id);
  }
  return set;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  if (options.k < 1) throw ConfigError("kmeans: k must be at least 1");
  if (options.k > static_cast<std::size_t>(points.rows())) {
    throw ConfigError("kmeans: k = " + std::to_string(options.k) + " exceeds the number of points");
  }
  Rng rng = make_rng(options.seed, Stream::kKMeans);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
    KMeansResult res = kmeans_once(points, options, rng);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

ClusterSet cluster_devices(std::size_t n_devices, const AuxTrainer& trainer, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > n_devices) {
    throw ConfigError("cluster_devices: need 1 <= K <= N, got K = " + std::to_string(k));
  }
  Eigen::MatrixXd weights;
  for (DeviceId id = 0; id < n_devices; ++id) {
    const Eigen::VectorXd w = trainer(id);
    if (id == 0) weights.resize(static_cast<Eigen::Index>(n_devices), w.size());
    if (w.size() != weights.cols()) throw ContractViolation("auxiliary models differ in size");
    weights.row(static_cast<Eigen::Index>(id)) = w.transpose();
  }
  KMeansOptions opt;
  opt.k = k;
  opt.seed = seed;
  return ClusterSet::from_labels(kmeans(weights, opt).labels, k);
}

double adjusted_rand_index(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  if (predicted.size() != truth.size()) {
    throw ContractViolation("adjusted_rand_index: labelings cover different device sets");
  }
  const std::size_t n = truth.size();
  if (n < 2) return 1.0;
  const std::size_t kp = *std::max_element(predicted.begin(), predicted.end()) + 1;
  const std::size_t kt = *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<double> table(kp * kt, 0.0);
  std::vector<double> rows(kt, 0.0);
  std::vector<double> cols(kp, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    table[truth[i] * kp + predicted[i]] += 1.0;
    rows[truth[i]] += 1.0;
    cols[predicted[i]] += 1.0;
  }
  auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
  double both = 0.0;
  for (double c : table) both += pairs(c);
  double same_truth = 0.0;
  for (double c : rows) same_truth += pairs(c);
  double same_pred = 0.0;
  for (double c : cols) same_pred += pairs(c);
  const double total = pairs(static_cast<double>(n));

  const double s11 = both;
  const double s10 = same_truth - both;  // together in truth only
  const double s01 = same_pred - both;   // together in prediction only
  const double s00 = total - s11 - s10 - s01;
  const double denom = (s00 + s01) * (s01 + s11) + (s00 + s10) * (s10 + s11);
  if (denom == 0.0) return (s01 == 0.0 && s10 == 0.0) ? 1.0 : 0.0;
  return 2.0 * (s00 * s11 - s01 * s10) / denom;
}

double adjusted_rand_index(const ClusterSet& predicted, const std::vector<std::size_t>& truth) {
  return adjusted_rand_index(predicted.labels, truth);
}

Scheduler::Scheduler(const SchedulerConfig& config, const ClusterSet& clusters, std::size_t n_devices)
    : config_(config), n_devices_(n_devices), rng_(make_rng(config.seed, Stream::kScheduler)) {
  if (config.total > n_devices) throw ConfigError("scheduler: H exceeds the number of devices");
  if (config.policy != SchedulePolicy::kRandom) {
    const std::size_t k = clusters.num_clusters();
    if (k == 0) throw ConfigError("scheduler: cluster policies need clusters");
    if (config.per_cluster * k != config.total) {
      throw ConfigError("scheduler: H must equal K*h for cluster policies (H = " + std::to_string(config.total) +
                        ", K = " + std::to_string(k) + ", h = " + std::to_string(config.per_cluster) + ")");
    }
    std::size_t covered = 0;
    for (const auto& c : clusters.clusters) covered += c.size();
    if (covered != n_devices) throw ContractViolation("scheduler: clusters do not partition the devices");
    working_ = clusters.clusters;
    record_.assign(k, {});
  }
}

Schedule Scheduler::next(std::size_t round) {
  Schedule s;
  s.round = round;
  switch (config_.policy) {
    case SchedulePolicy::kRandom: s.members = next_random(); break;
    case SchedulePolicy::kVkc: s.members = next_vkc(); break;
    case SchedulePolicy::kIkc: s.members = next_ikc(); break;
  }
  std::sort(s.members.begin(), s.members.end());
  return s;
}

std::vector<DeviceId> Scheduler::next_random() {
  std::vector<DeviceId> pool(n_devices_);
  std::iota(pool.begin(), pool.end(), DeviceId{0});
  return draw(pool, config_.total, rng_);
}

std::vector<DeviceId> Scheduler::next_vkc() {
  std::vector<DeviceId> picked;
  for (const auto& cluster : working_) {
    std::vector<DeviceId> pool = cluster;
    if (pool.size() >= config_.per_cluster) {
      auto chosen = draw(pool, config_.per_cluster, rng_);
      picked.insert(picked.end(), chosen.begin(), chosen.end());
    } else {
      picked.insert(picked.end(), pool.begin(), pool.end());
    }
  }
  top_up(picked);
  return picked;
}

std::vector<DeviceId> Scheduler::next_ikc() {
  const std::size_t h = config_.per_cluster;
  std::vector<DeviceId> picked;
  for (std::size_t k = 0; k < working_.size(); ++k) {
    auto& fresh = working_[k];
    auto& used = record_[k];
    std::vector<DeviceId> chosen;
    if (fresh.size() + used.size() >= h) {
      if (fresh.size() >= h) {
        chosen = draw(fresh, h, rng_);
        used.insert(used.end(), chosen.begin(), chosen.end());
      } else {
        chosen = fresh;
        const std::size_t missing = h - fresh.size();
        fresh.clear();
        auto reused = draw(used, missing, rng_);
        chosen.insert(chosen.end(), reused.begin(), reused.end());
        fresh = std::move(used);
        used = chosen;
      }
      std::sort(fresh.begin(), fresh.end());
      std::sort(used.begin(), used.end());
    } else {
      chosen = fresh;
    }
    picked.insert(picked.end(), chosen.begin(), chosen.end());
  }
  top_up(picked);
  return picked;
}

void Scheduler::top_up(std::vector<DeviceId>& picked) {
  if (picked.size() >= config_.total) return;
  std::vector<bool> taken(n_devices_, false);
  for (DeviceId id : picked) taken[id] = true;
  std::vector<DeviceId> rest;
  for (DeviceId id = 0; id < n_devices_; ++id) {
    if (!taken[id]) rest.push_back(id);
  }
  auto extra = draw(rest, config_.total - picked.size(), rng_);
  picked.insert(picked.end(), extra.begin(), extra.end());
}

std::string schedule_csv_header() { return csv_line({"round", "policy", "members"}); }

std::string schedule_csv_row(const Schedule& schedule, SchedulePolicy policy) {
  std::string members;
  for (std::size_t i = 0; i < schedule.members.size(); ++i) {
    if (i) members += ' ';
    members += std::to_string(schedule.members[i]);
  }
  return csv_line({format_number(schedule.round), to_string(policy), members});
}

}  // namespace hfl
