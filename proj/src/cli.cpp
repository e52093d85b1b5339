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

#include "latprune/cli.hpp"

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "io_util.hpp"
#include "latprune/engine.hpp"
#include "latprune/error.hpp"
#include "latprune/importance.hpp"
#include "latprune/knapsack.hpp"
#include "latprune/latency.hpp"
#include "latprune/netmodel.hpp"
#include "latprune/trace_gen.hpp"

namespace latprune {

namespace {

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    detail::write_text_file(out_path, text);
  }
}

SolverKind parse_solver(const std::string& s) {
  if (s == "exact") return SolverKind::kExact;
  if (s == "paper") return SolverKind::kPaper;
  throw ValidationError("solver must be exact or paper");
}

nlohmann::json load_json(const std::string& path, const std::string& what) {
  return detail::parse_json(detail::read_text_file(path), what + " " + path);
}

struct Args {
  std::string spec, params, out, lut, scores, config, plan, instance;
  std::string solver = "exact";
  int steps = 1;
  std::uint64_t seed = 0;
  double perturbation = 0.01;
  std::optional<double> budget_ms, budget_fraction;
  std::optional<int> group_size;
  bool groups = false;
  // run overrides
  std::optional<int> run_steps, run_window;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_target;
  std::optional<std::string> run_solver;
};

int cmd_gen_lut(const Args& a, std::ostream& out) {
  const auto spec = load_spec(a.spec);
  const auto table = gen_staircase_lut(spec, load_staircase_params(a.params));
  emit(format_lut_csv(table), a.out, out);
  return kExitOk;
}

int cmd_gen_trace(const Args& a, std::ostream& out) {
  const auto spec = load_spec(a.spec);
  const auto trace = gen_trace(a.seed, spec, a.steps, a.perturbation);
  emit(format_trace(trace), a.out, out);
  return kExitOk;
}

int cmd_plan(const Args& a, std::ostream& out) {
  const auto spec = load_spec(a.spec);
  const auto table = read_lut_csv(a.lut);
  const auto scores = scores_from_json(load_json(a.scores, "scores"));
  const double dense = network_latency(spec, dense_assignment(spec), table);
  double budget = 0.0;
  if (a.budget_ms) {
    budget = *a.budget_ms;
  } else if (a.budget_fraction) {
    if (!(*a.budget_fraction > 0.0 && *a.budget_fraction <= 1.0)) {
      throw ValidationError("--budget-fraction must lie in (0, 1]");
    }
    budget = *a.budget_fraction * dense;
  } else {
    throw ValidationError("plan needs --budget-ms or --budget-fraction");
  }
  StepOptions opts;
  opts.solver = parse_solver(a.solver);
  opts.grouping.group_size_override = a.group_size;
  const StepOutcome step = plan_once(spec, table, scores, budget, opts);

  PruneReport report = make_report(spec, &table, step.state, ConstraintKind::kLatency);
  MilestoneRecord rec;
  rec.budget = budget;
  rec.achieved_ms = report.final_latency_ms;
  rec.macs = report.final_macs;
  report.milestones.push_back(rec);
  auto j = report_to_json(report);
  j["groups"] = groups_to_json(step.groups);
  emit(j.dump(2) + "\n", a.out, out);
  return kExitOk;
}

int cmd_run(const Args& a, std::ostream& out) {
  PruneConfig cfg = load_config(a.config);
  if (a.run_steps) cfg.steps = *a.run_steps;
  if (a.run_window) cfg.window = *a.run_window;
  if (a.run_seed) cfg.seed = *a.run_seed;
  if (a.run_target) cfg.target_fraction = *a.run_target;
  if (a.run_solver) cfg.solver = parse_solver(*a.run_solver);
  // Re-validate after overrides.
  cfg = config_from_json([&] {
    auto j = load_json(a.config, "config");
    j["steps"] = cfg.steps;
    j["window"] = cfg.window;
    j["seed"] = cfg.seed;
    j["target_fraction"] = cfg.target_fraction;
    j["solver"] = cfg.solver == SolverKind::kPaper ? "paper" : "exact";
    return j;
  }());
  const auto report = run_pruning(cfg);
  emit(report_to_json(report).dump(2) + "\n", a.out, out);
  return kExitOk;
}

int cmd_report(const Args& a, std::ostream& out) {
  const auto plan = load_json(a.plan, "plan");
  if (!plan.contains("kept_counts") || !plan.contains("final")) {
    throw ValidationError("plan file lacks kept_counts/final");
  }
  if (a.groups) {
    if (!plan.contains("groups")) throw ValidationError("plan file has no group dump");
    emit(plan.at("groups").dump(2) + "\n", a.out, out);
    return kExitOk;
  }
  long total = 0;
  for (const auto& [_, c] : plan.at("kept_counts").items()) total += c.get<long>();
  nlohmann::json summary = {{"kept_channels_total", total},
                            {"layers", plan.at("kept_counts").size()},
                            {"final", plan.at("final")}};
  if (plan.contains("dense")) summary["dense"] = plan.at("dense");
  emit(summary.dump(2) + "\n", a.out, out);
  return kExitOk;
}

int cmd_oracle(const Args& a, std::ostream& out) {
  const auto inst = instance_from_json(load_json(a.instance, "instance"));
  Solution s;
  if (a.solver == "exact") s = solve_exact(inst.items, inst.budget);
  else if (a.solver == "paper") s = solve_paper(inst.items, inst.budget);
  else if (a.solver == "brute") s = brute_force(inst.items, inst.budget);
  else throw ValidationError("oracle solver must be exact, paper or brute");
  emit(solution_to_json(s).dump(2) + "\n", a.out, out);
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"Latency-aware structured pruning planner"};
  app.require_subcommand(1);
  Args a;

  auto* gen_lut = app.add_subcommand("gen-lut", "Synthesize a staircase latency table");
  gen_lut->add_option("--spec", a.spec, "Network spec JSON or builtin:resnet50")->required();
  gen_lut->add_option("--params", a.params, "Staircase parameter JSON or builtin:resnet50")
      ->required();
  gen_lut->add_option("--out", a.out, "Output CSV (default stdout)");

  auto* gen_trace_cmd = app.add_subcommand("gen-trace", "Generate a synthetic BN trace");
  gen_trace_cmd->add_option("--spec", a.spec)->required();
  gen_trace_cmd->add_option("--steps", a.steps)->required()->check(CLI::PositiveNumber);
  gen_trace_cmd->add_option("--seed", a.seed);
  gen_trace_cmd->add_option("--perturbation", a.perturbation)->check(CLI::NonNegativeNumber);
  gen_trace_cmd->add_option("--out", a.out);

  auto* plan = app.add_subcommand("plan", "Single-shot channel selection under a budget");
  plan->add_option("--spec", a.spec)->required();
  plan->add_option("--lut", a.lut)->required();
  plan->add_option("--scores", a.scores)->required();
  auto* bms = plan->add_option("--budget-ms", a.budget_ms);
  auto* bfr = plan->add_option("--budget-fraction", a.budget_fraction);
  bms->excludes(bfr);
  plan->add_option("--solver", a.solver);
  plan->add_option("--group-size", a.group_size)->check(CLI::PositiveNumber);
  plan->add_option("--out", a.out);

  auto* run = app.add_subcommand("run", "Iterative pruning driven by a config file");
  run->add_option("--config", a.config)->required();
  run->add_option("--out", a.out);
  run->add_option("--steps", a.run_steps);
  run->add_option("--window", a.run_window);
  run->add_option("--seed", a.run_seed);
  run->add_option("--target-fraction", a.run_target);
  run->add_option("--solver", a.run_solver);

  auto* report = app.add_subcommand("report", "Summarize a plan or report file");
  report->add_option("--plan", a.plan)->required();
  report->add_flag("--groups", a.groups, "Print the group dump");
  report->add_option("--out", a.out);

  auto* oracle = app.add_subcommand("oracle", "Solve a knapsack instance JSON");
  oracle->add_option("--instance", a.instance)->required();
  oracle->add_option("--solver", a.solver, "exact, paper or brute");
  oracle->add_option("--out", a.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return kExitOk;
    }
    err << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*gen_lut) return cmd_gen_lut(a, out);
    if (*gen_trace_cmd) return cmd_gen_trace(a, out);
    if (*plan) return cmd_plan(a, out);
    if (*run) return cmd_run(a, out);
    if (*report) return cmd_report(a, out);
    if (*oracle) return cmd_oracle(a, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace latprune
