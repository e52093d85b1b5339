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

#include "latprune/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "io_util.hpp"
#include "latprune/error.hpp"
#include "latprune/knapsack.hpp"
#include "latprune/trace_gen.hpp"

namespace latprune {

PruneConfig config_from_json(const nlohmann::json& j) {
  using detail::get_field;
  using detail::get_field_or;
  const std::string what = "config";
  detail::reject_unknown_keys(
      j,
      {"constraint_kind", "target_fraction", "steps", "window", "group_size_override",
       "seed", "solver", "perturbation", "toy_samples", "spec", "lut", "lut_params",
       "trace"},
      what);
  PruneConfig c;
  const auto kind = get_field_or<std::string>(j, "constraint_kind", "latency", what);
  if (kind == "latency") c.constraint_kind = ConstraintKind::kLatency;
  else if (kind == "flops") c.constraint_kind = ConstraintKind::kFlops;
  else throw ValidationError(what + ": constraint_kind must be latency or flops");
  c.target_fraction = get_field<double>(j, "target_fraction", what);
  c.steps = get_field_or<int>(j, "steps", c.steps, what);
  c.window = get_field_or<int>(j, "window", c.window, what);
  if (j.contains("group_size_override") && !j.at("group_size_override").is_null()) {
    c.group_size_override = get_field<int>(j, "group_size_override", what);
  }
  c.seed = get_field_or<std::uint64_t>(j, "seed", c.seed, what);
  const auto solver = get_field_or<std::string>(j, "solver", "exact", what);
  if (solver == "exact") c.solver = SolverKind::kExact;
  else if (solver == "paper") c.solver = SolverKind::kPaper;
  else throw ValidationError(what + ": solver must be exact or paper");
  c.perturbation = get_field_or<double>(j, "perturbation", c.perturbation, what);
  c.toy_samples = get_field_or<int>(j, "toy_samples", c.toy_samples, what);
  c.spec_path = get_field_or<std::string>(j, "spec", "", what);
  c.lut_path = get_field_or<std::string>(j, "lut", "", what);
  c.lut_params_path = get_field_or<std::string>(j, "lut_params", "", what);
  c.trace_path = get_field_or<std::string>(j, "trace", "", what);

  if (!(c.target_fraction > 0.0 && c.target_fraction <= 1.0)) {
    throw ValidationError(what + ": target_fraction must lie in (0, 1]");
  }
  if (c.steps < 1) throw ValidationError(what + ": steps must be >= 1");
  if (c.window < 1) throw ValidationError(what + ": window must be >= 1");
  if (c.group_size_override && *c.group_size_override < 1) {
    throw ValidationError(what + ": group_size_override must be >= 1");
  }
  return c;
}

PruneConfig load_config(const std::string& path) {
  return config_from_json(
      detail::parse_json(detail::read_text_file(path), "config " + path));
}

std::vector<double> schedule_milestones(double c0, double c, int k) {
  if (k < 1) throw ValidationError("milestone count must be >= 1");
  if (!(c > 0.0) || c > c0) {
    throw ValidationError("milestones need 0 < C <= C0");
  }
  std::vector<double> m;
  m.reserve(static_cast<std::size_t>(k));
  const double ratio = c / c0;
  for (int j = 1; j < k; ++j) {
    m.push_back(c0 * std::pow(ratio, static_cast<double>(j) / k));
  }
  m.push_back(c);
  return m;
}

PruneState initial_state(const NetworkSpec& spec) {
  PruneState s;
  s.assign = dense_assignment(spec);
  for (const auto& l : spec.layers) {
    auto& ch = s.assign.channels[l.id];
    ch.resize(static_cast<std::size_t>(l.out_channels));
    std::iota(ch.begin(), ch.end(), 0);
  }
  return s;
}

std::map<int, std::int64_t> flops_costs(const NetworkSpec& spec,
                                        const ChannelAssignment& current) {
  std::map<int, std::int64_t> costs;
  for (const auto& l : spec.layers) {
    std::int64_t c = layer_macs(l, resolve_in_channels(spec, current, l), 1);
    for (int sid : successors(spec, l.id)) {
      const auto& s = spec.layer(sid);
      // A depthwise successor's cost tracks its own (coupled) out-count.
      if (s.kind == LayerKind::kGroupConv) continue;
      c += layer_macs(s, 1, current.count(s));
    }
    costs[l.id] = c;
  }
  return costs;
}

namespace {

constexpr std::int64_t kMaxFlopsCapacity = std::int64_t{1} << 20;

LayerRankings surviving_rankings(const NetworkSpec& spec, const ChannelAssignment& assign,
                                 const ImportanceScores& scores) {
  LayerRankings rankings;
  for (const auto& l : spec.layers) {
    auto it = scores.find(l.id);
    if (it == scores.end()) {
      if (!l.prunable) continue;
      throw ValidationError("no importance scores for layer " + std::to_string(l.id));
    }
    if (static_cast<int>(it->second.size()) != l.out_channels) {
      throw ValidationError("importance scores of layer " + std::to_string(l.id) +
                            " do not cover its " + std::to_string(l.out_channels) +
                            " channels");
    }
    const auto& surviving = assign.channels.at(l.id);
    if (surviving.empty()) {
      rankings[l.id] = {};
      continue;
    }
    std::vector<double> sub;
    sub.reserve(surviving.size());
    for (int c : surviving) sub.push_back(it->second[static_cast<std::size_t>(c)]);
    rankings[l.id] = rank_layer(sub, surviving);
  }
  return rankings;
}

// Chain-level MACs per removed channel index: own costs of every member
// plus the in-channel term of each distinct successor.
void fill_flops_costs(const NetworkSpec& spec, const ChannelAssignment& current,
                      GroupedInstance& grouped) {
  for (const auto& chain : grouped.chains) {
    std::int64_t per_channel = 0;
    std::set<int> succ;
    for (int id : chain.layer_ids) {
      const auto& l = spec.layer(id);
      per_channel += layer_macs(l, resolve_in_channels(spec, current, l), 1);
      for (int s : successors(spec, id)) succ.insert(s);
    }
    for (int sid : succ) {
      const auto& s = spec.layer(sid);
      if (s.kind == LayerKind::kGroupConv) continue;
      per_channel += layer_macs(s, 1, current.count(s));
    }
    for (int gid : chain.group_ids) {
      auto& g = grouped.groups[gid];
      g.cost_scaled = per_channel * static_cast<std::int64_t>(g.channels.size());
      g.cost_ms = 0.0;
    }
  }
}

ChannelAssignment apply_selection(const GroupedInstance& grouped,
                                  const std::vector<int>& kept_ids) {
  std::set<int> kept(kept_ids.begin(), kept_ids.end());
  ChannelAssignment a;
  for (const auto& chain : grouped.chains) {
    std::vector<int> channels;
    for (int gid : chain.group_ids) {
      const auto& g = grouped.groups[gid];
      if (g.mandatory || kept.count(gid)) {
        channels.insert(channels.end(), g.channels.begin(), g.channels.end());
      }
    }
    std::sort(channels.begin(), channels.end());
    for (int id : chain.layer_ids) {
      a.kept[id] = static_cast<int>(channels.size());
      a.channels[id] = channels;
    }
  }
  return a;
}

Solution run_solver(SolverKind kind, std::span<const Item> items, std::int64_t budget) {
  return kind == SolverKind::kPaper ? solve_paper(items, budget)
                                    : solve_exact(items, budget);
}

// Rescales non-negative MAC costs into a solver-sized capacity. Costs round
// up and the budget rounds down, so a feasible scaled selection is feasible
// in MACs.
std::int64_t rescale_flops(std::vector<Item>& items, std::int64_t budget) {
  std::int64_t unit = 0;
  std::int64_t total = 0;
  for (const auto& it : items) {
    unit = std::gcd(unit, it.cost);
    total += it.cost;
  }
  if (unit == 0) unit = 1;
  const std::int64_t span = std::min(budget, total);
  if (span / unit > kMaxFlopsCapacity) {
    unit = std::max(unit, (span + kMaxFlopsCapacity - 1) / kMaxFlopsCapacity);
  }
  for (auto& it : items) it.cost = (it.cost + unit - 1) / unit;
  return budget / unit;
}

StepOutcome select_groups(const NetworkSpec& spec, const PruneState& state,
                          const LayerRankings& rankings, const LatencyTable* table,
                          double milestone, const StepOptions& options) {
  const bool flops = options.constraint_kind == ConstraintKind::kFlops;
  GroupingOptions gopts = options.grouping;
  if (flops && !gopts.group_size_override) gopts.group_size_override = 1;
  GroupedInstance grouped =
      build_groups(spec, rankings, flops ? nullptr : table, state.assign, gopts);

  std::int64_t budget = 0;
  const std::int64_t current_macs = network_flops(spec, state.assign);
  if (flops) {
    fill_flops_costs(spec, state.assign, grouped);
    std::int64_t total = 0;
    for (const auto& g : grouped.groups) total += g.cost_scaled;
    // Linear model: removing a group lowers MACs by its cost.
    budget = static_cast<std::int64_t>(std::floor(milestone)) - current_macs + total;
  } else {
    budget = to_int_cost(milestone);
  }
  const KnapsackView view = knapsack_items(grouped);
  budget -= view.mandatory_cost;

  StepOutcome out;
  out.group_count = grouped.total_group_count();
  out.solver_items = view.items.size();
  while (true) {
    if (budget < 0) {
      std::ostringstream msg;
      msg << "milestone " << milestone << (flops ? " MACs" : " ms")
          << " cannot be met: mandatory groups cost " << view.mandatory_cost
          << (flops ? " MACs" : " scaled units") << " across "
          << grouped.chains.size() << " chains";
      throw InfeasibleError(msg.str());
    }
    std::vector<Item> items = view.items;
    const std::int64_t solver_budget = flops ? rescale_flops(items, budget) : budget;
    const Solution sol = run_solver(options.solver, items, solver_budget);
    ChannelAssignment next = apply_selection(grouped, sol.kept_item_ids);
    const double achieved =
        flops ? static_cast<double>(network_flops(spec, next))
              : network_latency(spec, next, *table);
    if (achieved <= milestone) {
      out.state.assign = std::move(next);
      out.state.step = state.step + 1;
      out.achieved = achieved;
      out.macs = network_flops(spec, out.state.assign);
      out.groups = std::move(grouped);
      return out;
    }
    // Cross-layer effects or rounding pushed the true cost over: tighten.
    const std::int64_t overshoot =
        flops ? static_cast<std::int64_t>(std::ceil(achieved - milestone))
              : to_int_cost(achieved) - to_int_cost(milestone);
    budget -= std::max<std::int64_t>(1, overshoot);
    ++out.budget_retries;
  }
}

double measure(const NetworkSpec& spec, const ChannelAssignment& a,
               const LatencyTable* table, ConstraintKind kind) {
  if (kind == ConstraintKind::kFlops) return static_cast<double>(network_flops(spec, a));
  return network_latency(spec, a, *table);
}

}  // namespace

StepOutcome prune_step(const NetworkSpec& spec, const PruneState& state,
                       std::span<const BNSnapshot> window, const LatencyTable* table,
                       double milestone, const StepOptions& options) {
  if (options.constraint_kind == ConstraintKind::kLatency && table == nullptr) {
    throw ValidationError("latency-constrained pruning needs a latency table");
  }
  const double current = measure(spec, state.assign, table, options.constraint_kind);
  if (current <= milestone) {
    StepOutcome out;
    out.state = state;
    out.state.step = state.step + 1;
    out.achieved = current;
    out.macs = network_flops(spec, state.assign);
    return out;
  }
  const auto scores = accumulate(window);
  const auto rankings = surviving_rankings(spec, state.assign, scores);
  return select_groups(spec, state, rankings, table, milestone, options);
}

StepOutcome plan_once(const NetworkSpec& spec, const LatencyTable& table,
                      const ImportanceScores& scores, double budget_ms,
                      const StepOptions& options) {
  const PruneState dense = initial_state(spec);
  const double current = network_latency(spec, dense.assign, table);
  if (current <= budget_ms) {
    StepOutcome out;
    out.state = dense;
    out.state.step = 1;
    out.achieved = current;
    out.macs = network_flops(spec, dense.assign);
    return out;
  }
  StepOptions opts = options;
  opts.constraint_kind = ConstraintKind::kLatency;
  const auto rankings = surviving_rankings(spec, dense.assign, scores);
  return select_groups(spec, dense, rankings, &table, budget_ms, opts);
}

PruneReport make_report(const NetworkSpec& spec, const LatencyTable* table,
                        const PruneState& state, ConstraintKind kind) {
  PruneReport r;
  r.constraint_kind = kind;
  for (const auto& l : spec.layers) {
    r.kept_counts[l.id] = state.assign.count(l);
    auto ch = state.assign.channels.find(l.id);
    if (ch != state.assign.channels.end()) r.kept_channels[l.id] = ch->second;
  }
  const auto dense = dense_assignment(spec);
  r.dense_macs = network_flops(spec, dense);
  r.final_macs = network_flops(spec, state.assign);
  if (table != nullptr) {
    r.dense_latency_ms = network_latency(spec, dense, *table);
    r.final_latency_ms = network_latency(spec, state.assign, *table);
    r.speedup = r.final_latency_ms > 0.0 ? r.dense_latency_ms / r.final_latency_ms : 1.0;
  } else {
    r.speedup = r.final_macs > 0 ? static_cast<double>(r.dense_macs) / r.final_macs : 1.0;
  }
  return r;
}

PruneReport run_pruning(const NetworkSpec& spec, const LatencyTable* table,
                        std::span<const BNSnapshot> trace, const PruneConfig& config) {
  const auto& kind = config.constraint_kind;
  if (kind == ConstraintKind::kLatency && table == nullptr) {
    throw ValidationError("latency-constrained pruning needs a latency table");
  }
  const std::size_t needed =
      static_cast<std::size_t>(config.steps) * static_cast<std::size_t>(config.window);
  if (trace.size() < needed) {
    throw ValidationError("trace has " + std::to_string(trace.size()) +
                          " snapshots; " + std::to_string(needed) + " required");
  }
  PruneState state = initial_state(spec);
  const double c0 = measure(spec, state.assign, table, kind);
  const auto milestones = schedule_milestones(c0, config.target_fraction * c0, config.steps);

  StepOptions opts;
  opts.constraint_kind = kind;
  opts.solver = config.solver;
  opts.grouping.group_size_override = config.group_size_override;

  std::vector<MilestoneRecord> records;
  for (int j = 0; j < config.steps; ++j) {
    const auto window = trace.subspan(static_cast<std::size_t>(j) * config.window,
                                      static_cast<std::size_t>(config.window));
    StepOutcome out = prune_step(spec, state, window, table, milestones[j], opts);
    state = std::move(out.state);
    MilestoneRecord rec;
    rec.budget = milestones[j];
    rec.macs = out.macs;
    rec.achieved_ms = table != nullptr ? network_latency(spec, state.assign, *table) : 0.0;
    records.push_back(rec);
  }
  PruneReport report = make_report(spec, table, state, kind);
  report.milestones = std::move(records);
  return report;
}

PruneReport run_pruning(const PruneConfig& config) {
  if (config.spec_path.empty()) throw ValidationError("config: 'spec' is required");
  const NetworkSpec spec = load_spec(config.spec_path);
  std::optional<LatencyTable> table;
  if (!config.lut_path.empty()) {
    table = read_lut_csv(config.lut_path);
  } else if (!config.lut_params_path.empty()) {
    table = gen_staircase_lut(spec, load_staircase_params(config.lut_params_path));
  } else if (config.constraint_kind == ConstraintKind::kLatency) {
    throw ValidationError("config: latency mode needs 'lut' or 'lut_params'");
  }
  std::vector<BNSnapshot> trace;
  if (!config.trace_path.empty()) {
    trace = read_trace(config.trace_path);
  } else {
    ToyNetOptions topts;
    topts.samples = config.toy_samples;
    trace = gen_trace(config.seed, spec, config.steps * config.window,
                      config.perturbation, topts);
  }
  return run_pruning(spec, table ? &*table : nullptr, trace, config);
}

nlohmann::json report_to_json(const PruneReport& report) {
  const bool flops = report.constraint_kind == ConstraintKind::kFlops;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [id, c] : report.kept_counts) counts[std::to_string(id)] = c;
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& [id, ch] : report.kept_channels) channels[std::to_string(id)] = ch;
  nlohmann::json milestones = nlohmann::json::array();
  for (const auto& m : report.milestones) {
    milestones.push_back({{flops ? "budget_macs" : "budget_ms", m.budget},
                          {"achieved_ms", m.achieved_ms},
                          {"macs", m.macs}});
  }
  return {{"constraint_kind", flops ? "flops" : "latency"},
          {"kept_counts", counts},
          {"kept_channels", channels},
          {"milestones", milestones},
          {"dense", {{"latency_ms", report.dense_latency_ms}, {"macs", report.dense_macs}}},
          {"final",
           {{"latency_ms", report.final_latency_ms},
            {"macs", report.final_macs},
            {"speedup", report.speedup}}}};
}

}  // namespace latprune
