// SPDX-License-Identifier: Apache-2.0
#include "hfl/assigner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "hfl/allocator.hpp"
#include "hfl/csv.hpp"
#include "hfl/error.hpp"
#include "hfl/random.hpp"

namespace hfl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void remove_member(std::vector<DeviceId>& group, DeviceId id) {
  group.erase(std::find(group.begin(), group.end(), id));
}

void insert_member(std::vector<DeviceId>& group, DeviceId id) {
  group.insert(std::upper_bound(group.begin(), group.end(), id), id);
}

double combine(const std::vector<TimeEnergy>& costs, double lambda) {
  double t = 0.0;
  double e = 0.0;
  for (const auto& c : costs) {
    t = std::max(t, c.time);
    e += c.energy;
  }
  return e + lambda * t;
}

void fill_costs(AssignmentOutcome& out, const std::vector<TimeEnergy>& costs, double lambda) {
  out.round_time = 0.0;
  out.round_energy = 0.0;
  for (const auto& c : costs) {
    out.round_time = std::max(out.round_time, c.time);
    out.round_energy += c.energy;
  }
  out.objective = out.round_energy + lambda * out.round_time;
}

}  // namespace

std::string to_string(AssignmentKind kind) {
  switch (kind) {
    case AssignmentKind::kGeographic: return "geographic";
    case AssignmentKind::kHfel: return "hfel";
    case AssignmentKind::kExhaustive: return "exhaustive";
    case AssignmentKind::kDrl: return "drl";
  }
  return "unknown";
}

AssignmentKind parse_assignment_kind(const std::string& name) {
  if (name == "geographic") return AssignmentKind::kGeographic;
  if (name == "hfel") return AssignmentKind::kHfel;
  if (name == "exhaustive") return AssignmentKind::kExhaustive;
  if (name == "drl" || name == "drl-policy") return AssignmentKind::kDrl;
  throw ConfigError("unknown assignment strategy '" + name + "'");
}

EdgeCostCache::EdgeCostCache(const Topology& topo, const CostParams& params, double tolerance)
    : topo_(topo), params_(params), tolerance_(tolerance) {}

TimeEnergy EdgeCostCache::cost(EdgeId edge, const std::vector<DeviceId>& members) {
  if (members.empty()) return {};
  auto key = std::make_pair(edge, members);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  ++solves_;
  const AllocResult res = solve_edge(make_request(topo_, edge, members, params_, tolerance_));
  memo_.emplace(std::move(key), res.cost);
  return res.cost;
}

double EdgeCostCache::objective(const AssignmentPattern& pattern) {
  std::vector<TimeEnergy> costs;
  for (EdgeId m = 0; m < pattern.num_edges(); ++m) costs.push_back(cost(m, pattern.groups[m]));
  return combine(costs, params_.lambda);
}

AssignmentPattern assign_geographic(const std::vector<DeviceId>& schedule, const Topology& topo) {
  AssignmentPattern pattern(topo.num_edges());
  for (DeviceId id : schedule) pattern.groups[nearest_edge(topo, id)].push_back(id);
  pattern.normalize();
  return pattern;
}

AssignmentOutcome assign_hfel(const std::vector<DeviceId>& schedule, const Topology& topo, const CostParams& params,
                              const AssignmentStrategy& strategy, double tolerance) {
  const auto start = Clock::now();
  if (schedule.empty()) throw ContractViolation("assign_hfel: empty schedule");
  EdgeCostCache cache(topo, params, tolerance);
  const std::size_t n_edges = topo.num_edges();

  AssignmentOutcome out;
  out.pattern = assign_geographic(schedule, topo);
  std::vector<TimeEnergy> costs(n_edges);
  for (EdgeId m = 0; m < n_edges; ++m) costs[m] = cache.cost(m, out.pattern.groups[m]);
  double best = combine(costs, params.lambda);

  std::vector<DeviceId> order = schedule;
  std::sort(order.begin(), order.end());
  if (strategy.hfel_shuffle) {
    Rng rng = make_rng(strategy.hfel_seed, Stream::kHfelShuffle);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<EdgeId> edge_of(topo.num_devices(), n_edges);
  for (EdgeId m = 0; m < n_edges; ++m) {
    for (DeviceId id : out.pattern.groups[m]) edge_of[id] = m;
  }

  // Evaluates moving the listed groups to new member lists; keeps the move on
  // strict improvement.
  auto try_move = [&](EdgeId ea, std::vector<DeviceId> ga, EdgeId eb, std::vector<DeviceId> gb) {
    std::vector<TimeEnergy> trial = costs;
    try {
      trial[ea] = cache.cost(ea, ga);
      trial[eb] = cache.cost(eb, gb);
    } catch (const InfeasibleError&) {
      return false;
    }
    const double value = combine(trial, params.lambda);
    if (!(value < best)) return false;
    best = value;
    costs = std::move(trial);
    out.pattern.groups[ea] = std::move(ga);
    out.pattern.groups[eb] = std::move(gb);
    ++out.accepted;
    return true;
  };

  std::size_t transfers = strategy.hfel_transfer_budget;
  while (transfers > 0 && n_edges > 1) {
    bool changed = false;
    for (DeviceId id : order) {
      for (EdgeId target = 0; target < n_edges && transfers > 0; ++target) {
        const EdgeId source = edge_of[id];
        if (target == source) continue;
        --transfers;
        auto src = out.pattern.groups[source];
        auto dst = out.pattern.groups[target];
        remove_member(src, id);
        insert_member(dst, id);
        if (try_move(source, std::move(src), target, std::move(dst))) {
          edge_of[id] = target;
          changed = true;
        }
      }
      if (transfers == 0) break;
    }
    if (!changed) break;
  }

  std::size_t exchanges = strategy.hfel_exchange_budget;
  while (exchanges > 0 && n_edges > 1) {
    bool changed = false;
    for (std::size_t i = 0; i < order.size() && exchanges > 0; ++i) {
      for (std::size_t j = i + 1; j < order.size() && exchanges > 0; ++j) {
        const DeviceId a = order[i];
        const DeviceId b = order[j];
        const EdgeId ea = edge_of[a];
        const EdgeId eb = edge_of[b];
        if (ea == eb) continue;
        --exchanges;
        auto ga = out.pattern.groups[ea];
        auto gb = out.pattern.groups[eb];
        remove_member(ga, a);
        insert_member(ga, b);
        remove_member(gb, b);
        insert_member(gb, a);
        if (try_move(ea, std::move(ga), eb, std::move(gb))) {
          edge_of[a] = eb;
          edge_of[b] = ea;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  fill_costs(out, costs, params.lambda);
  out.evaluations = cache.solves();
  out.wall_time_s = seconds_since(start);
  return out;
}

AssignmentOutcome assign_exhaustive(const std::vector<DeviceId>& schedule, const Topology& topo,
                                    const CostParams& params, double tolerance) {
  const auto start = Clock::now();
  if (schedule.empty()) throw ContractViolation("assign_exhaustive: empty schedule");
  const std::size_t n_edges = topo.num_edges();
  const std::size_t h = schedule.size();
  double patterns = std::pow(static_cast<double>(n_edges), static_cast<double>(h));
  if (patterns > 1e6) {
    throw ConfigError("assign_exhaustive: " + std::to_string(n_edges) + "^" + std::to_string(h) +
                      " patterns exceeds the 10^6 enumeration limit");
  }
  std::vector<DeviceId> devices = schedule;
  std::sort(devices.begin(), devices.end());

  EdgeCostCache cache(topo, params, tolerance);
  // Costs per (edge, member mask) so each group is allocated once.
  std::unordered_map<std::uint64_t, TimeEnergy> by_mask;
  auto group_cost = [&](EdgeId m, std::uint64_t mask, const std::vector<DeviceId>& members) {
    const std::uint64_t key = mask * n_edges + m;
    if (auto it = by_mask.find(key); it != by_mask.end()) return it->second;
    TimeEnergy c;
    try {
      c = cache.cost(m, members);
    } catch (const InfeasibleError&) {
      c = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    by_mask.emplace(key, c);
    return c;
  };

  std::vector<std::size_t> digits(h, 0);  // digits[k] = edge of devices[k]
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_digits;
  std::vector<TimeEnergy> best_costs;
  std::vector<std::vector<DeviceId>> groups(n_edges);
  std::vector<std::uint64_t> masks(n_edges);
  std::vector<TimeEnergy> costs(n_edges);
  for (std::size_t count = 0; count < static_cast<std::size_t>(patterns); ++count) {
    for (auto& g : groups) g.clear();
    std::fill(masks.begin(), masks.end(), 0);
    for (std::size_t k = 0; k < h; ++k) {
      groups[digits[k]].push_back(devices[k]);
      masks[digits[k]] |= std::uint64_t{1} << k;
    }
    for (EdgeId m = 0; m < n_edges; ++m) costs[m] = group_cost(m, masks[m], groups[m]);
    const double value = combine(costs, params.lambda);
    if (value < best) {
      best = value;
      best_digits = digits;
      best_costs = costs;
    }
    // Increment with the first device as the most significant digit, which
    // visits patterns in lexicographic order.
    for (std::size_t k = h; k-- > 0;) {
      if (++digits[k] < n_edges) break;
      digits[k] = 0;
    }
  }
  if (!std::isfinite(best)) throw InfeasibleError("assign_exhaustive: every pattern is infeasible");

  AssignmentOutcome out;
  out.pattern = AssignmentPattern(n_edges);
  for (std::size_t k = 0; k < h; ++k) out.pattern.groups[best_digits[k]].push_back(devices[k]);
  fill_costs(out, best_costs, params.lambda);
  out.evaluations = cache.solves();
  out.wall_time_s = seconds_since(start);
  return out;
}

AssignmentOutcome evaluate_pattern(const AssignmentPattern& pattern, const Topology& topo, const CostParams& params,
                                   double tolerance) {
  EdgeCostCache cache(topo, params, tolerance);
  std::vector<TimeEnergy> costs;
  for (EdgeId m = 0; m < pattern.num_edges(); ++m) costs.push_back(cache.cost(m, pattern.groups[m]));
  AssignmentOutcome out;
  out.pattern = pattern;
  fill_costs(out, costs, params.lambda);
  out.evaluations = cache.solves();
  return out;
}

std::string outcome_csv_header() {
  return csv_line({"strategy", "instance", "objective", "T_i", "E_i", "wall_time_s", "evaluations"});
}

std::string outcome_csv_row(const std::string& strategy, std::size_t instance, const AssignmentOutcome& o) {
  return csv_line({strategy, format_number(instance), format_number(o.objective), format_number(o.round_time),
                   format_number(o.round_energy), format_number(o.wall_time_s), format_number(o.evaluations)});
}

}  // namespace hfl
