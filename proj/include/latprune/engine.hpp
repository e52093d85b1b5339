// Copyright 2026 The latprune Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATPRUNE_ENGINE_HPP_
#define LATPRUNE_ENGINE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "latprune/grouping.hpp"
#include "latprune/importance.hpp"
#include "latprune/latency.hpp"
#include "latprune/netmodel.hpp"

namespace latprune {

enum class ConstraintKind { kLatency, kFlops };
enum class SolverKind { kExact, kPaper };

struct PruneConfig {
  ConstraintKind constraint_kind = ConstraintKind::kLatency;
  double target_fraction = 1.0;  // share of the dense cost that remains
  int steps = 30;                // k pruning steps
  int window = 320;              // r minibatches per step
  std::optional<int> group_size_override;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::kExact;
  double perturbation = 0.01;    // trace noise when no trace file is given
  int toy_samples = 64;
  std::string spec_path;
  std::string lut_path;          // CSV table, or
  std::string lut_params_path;   // staircase parameters to synthesize one
  std::string trace_path;        // optional; generated from seed otherwise
};

// Flat JSON object mirroring PruneConfig. Unknown keys are rejected;
// target_fraction is required.
PruneConfig config_from_json(const nlohmann::json& j);
PruneConfig load_config(const std::string& path);

// Geometric interpolation C0 * (C / C0)^(j / k) for j = 1..k, last entry
// exactly C.
std::vector<double> schedule_milestones(double c0, double c, int k);

struct PruneState {
  ChannelAssignment assign;  // counts plus surviving channel indices
  int step = 0;
};

PruneState initial_state(const NetworkSpec& spec);

struct StepOptions {
  ConstraintKind constraint_kind = ConstraintKind::kLatency;
  SolverKind solver = SolverKind::kExact;
  GroupingOptions grouping;
};

struct StepOutcome {
  PruneState state;
  double achieved = 0.0;  // ms in latency mode, MACs in flops mode
  std::int64_t macs = 0;
  GroupedInstance groups;  // empty when the step removed nothing
  std::size_t group_count = 0;
  std::size_t solver_items = 0;
  int budget_retries = 0;
};

// One pruning step against `milestone` (ms, or MACs in flops mode). The
// table may be null in flops mode. Throws InfeasibleError when mandatory
// groups alone exceed the milestone.
StepOutcome prune_step(const NetworkSpec& spec, const PruneState& state,
                       std::span<const BNSnapshot> window, const LatencyTable* table,
                       double milestone, const StepOptions& options = {});

// Single-shot selection from precomputed scores (one step, no schedule).
StepOutcome plan_once(const NetworkSpec& spec, const LatencyTable& table,
                      const ImportanceScores& scores, double budget_ms,
                      const StepOptions& options = {});

// Per-output-channel MACs of every layer at the current counts: own MACs
// per out-channel plus each successor's MACs per in-channel.
std::map<int, std::int64_t> flops_costs(const NetworkSpec& spec,
                                        const ChannelAssignment& current);

struct MilestoneRecord {
  double budget = 0.0;
  double achieved_ms = 0.0;
  std::int64_t macs = 0;
};

struct PruneReport {
  ConstraintKind constraint_kind = ConstraintKind::kLatency;
  std::map<int, int> kept_counts;
  std::map<int, std::vector<int>> kept_channels;
  std::vector<MilestoneRecord> milestones;
  double dense_latency_ms = 0.0;
  std::int64_t dense_macs = 0;
  double final_latency_ms = 0.0;
  std::int64_t final_macs = 0;
  double speedup = 1.0;
};

PruneReport run_pruning(const NetworkSpec& spec, const LatencyTable* table,
                        std::span<const BNSnapshot> trace, const PruneConfig& config);
// Loads spec, table and trace as named by the config.
PruneReport run_pruning(const PruneConfig& config);

PruneReport make_report(const NetworkSpec& spec, const LatencyTable* table,
                        const PruneState& state, ConstraintKind kind);
nlohmann::json report_to_json(const PruneReport& report);

}  // namespace latprune

#endif  // LATPRUNE_ENGINE_HPP_
