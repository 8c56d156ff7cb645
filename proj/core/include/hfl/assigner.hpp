// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hfl/cost.hpp"
#include "hfl/topology.hpp"

namespace hfl {

enum class AssignmentKind { kGeographic, kHfel, kExhaustive, kDrl };

std::string to_string(AssignmentKind kind);
AssignmentKind parse_assignment_kind(const std::string& name);

struct AssignmentStrategy {
  AssignmentKind kind = AssignmentKind::kHfel;
  std::size_t hfel_transfer_budget = 100;
  std::size_t hfel_exchange_budget = 300;
  bool hfel_shuffle = false;  // seeded candidate order instead of id order
  std::uint64_t hfel_seed = 0;
};

struct AssignmentOutcome {
  AssignmentPattern pattern;
  double objective = 0.0;  // E_i + lambda*T_i after allocation
  double round_time = 0.0;
  double round_energy = 0.0;
  double wall_time_s = 0.0;
  std::size_t evaluations = 0;  // edge allocator solves actually run
  std::size_t accepted = 0;     // HFEL adjustments kept
};

/// Memoized per-edge allocation costs keyed by (edge, sorted member list).
class EdgeCostCache {
 public:
  EdgeCostCache(const Topology& topo, const CostParams& params, double tolerance);

  /// Edge time/energy including the cloud upload; zero for an empty group.
  /// Throws InfeasibleError when the group has no finite-time allocation.
  TimeEnergy cost(EdgeId edge, const std::vector<DeviceId>& members);
  double objective(const AssignmentPattern& pattern);
  std::size_t solves() const { return solves_; }

 private:
  const Topology& topo_;
  CostParams params_;
  double tolerance_;
  std::map<std::pair<EdgeId, std::vector<DeviceId>>, TimeEnergy> memo_;
  std::size_t solves_ = 0;
};

/// Nearest edge per device; ties go to the lower edge id.
AssignmentPattern assign_geographic(const std::vector<DeviceId>& schedule, const Topology& topo);

/// Greedy transfer-then-exchange search starting from the geographic pattern.
/// Budgets count attempted candidates; only strictly improving moves are kept.
AssignmentOutcome assign_hfel(const std::vector<DeviceId>& schedule, const Topology& topo, const CostParams& params,
                              const AssignmentStrategy& strategy = {}, double tolerance = 1e-4);

/// Enumerates all M^H patterns (refuses above 10^6) and keeps the
/// lexicographically first minimizer.
AssignmentOutcome assign_exhaustive(const std::vector<DeviceId>& schedule, const Topology& topo,
                                    const CostParams& params, double tolerance = 1e-4);

/// Allocates a fixed pattern and fills the outcome's cost fields.
AssignmentOutcome evaluate_pattern(const AssignmentPattern& pattern, const Topology& topo, const CostParams& params,
                                   double tolerance = 1e-4);

std::string outcome_csv_header();
std::string outcome_csv_row(const std::string& strategy, std::size_t instance, const AssignmentOutcome& outcome);

}  // namespace hfl
