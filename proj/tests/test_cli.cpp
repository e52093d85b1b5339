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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "io_util.hpp"
#include "latprune/cli.hpp"
#include "latprune/knapsack.hpp"
#include "latprune/netmodel.hpp"

using namespace latprune;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "latprune");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("latprune_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string put(const std::string& name, const std::string& text) {
  const auto p = (workdir() / name).string();
  detail::write_text_file(p, text);
  return p;
}

std::string slurp(const std::string& path) { return detail::read_text_file(path); }

// Two 3-channel layers whose scaled cumulative costs are 4,5,8 and 2,4,6: the
// knapsack fixture with optimum 22 at budget 7. B's table has a single in-row,
// so its latency does not depend on A.
struct Fixture {
  std::string spec, lut, scores, instance;
};

Fixture fixture(bool a_unprunable = false) {
  NetworkSpec s;
  s.input_channels = 3;
  s.layers.push_back(latprune::testing::conv(0, 3, 3, 1, 1, {}));
  s.layers.push_back(latprune::testing::conv(1, 3, 3, 1, 1, {0}));
  if (a_unprunable) {
    s.layers[0].prunable = false;
    s.layers[0].min_keep = 3;
  }
  Fixture f;
  f.spec = put(a_unprunable ? "spec_fixed.json" : "spec.json", spec_to_json(s).dump());
  f.lut = put("lut.csv",
              "layer_id,in_channels,out_channels,latency_ms\n"
              "0,3,0,0\n0,3,1,0.004\n0,3,2,0.005\n0,3,3,0.008\n"
              "1,3,0,0\n1,3,1,0.002\n1,3,2,0.004\n1,3,3,0.006\n");
  f.scores = put("scores.json", R"({"0": [9, 5, 1], "1": [8, 6, 2]})");
  f.instance = put("instance.json",
                   instance_to_json({latprune::testing::six_item_fixture(), 7}).dump());
  return f;
}

}  // namespace

TEST_CASE("unknown subcommand exits 1 with usage") {
  const auto r = run({"frobnicate"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"oracle"}).code == kExitValidation);
}

TEST_CASE("plan and oracle agree on the six-item fixture") {
  const auto f = fixture();
  const auto oracle = run({"oracle", "--instance", f.instance});
  REQUIRE(oracle.code == kExitOk);
  const auto oj = nlohmann::json::parse(oracle.out);
  CHECK(oj.at("kept_item_ids") == nlohmann::json::array({0, 1, 3}));
  CHECK(oj.at("total_cost") == 7);

  const auto brute = run({"oracle", "--instance", f.instance, "--solver", "brute"});
  CHECK(nlohmann::json::parse(brute.out).at("kept_item_ids") == oj.at("kept_item_ids"));

  const auto out = (workdir() / "plan.json").string();
  const auto plan = run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores,
                         "--budget-ms", "0.007", "--group-size", "1", "--out", out});
  REQUIRE(plan.code == kExitOk);
  const auto pj = nlohmann::json::parse(slurp(out));
  CHECK(pj.at("kept_channels").at("0") == nlohmann::json::array({0, 1}));
  CHECK(pj.at("kept_channels").at("1") == nlohmann::json::array({0}));

  // Map kept channels back to group ids, which follow the instance's item ids.
  std::vector<int> kept;
  for (const auto& chain : pj.at("groups").at("chains")) {
    const auto layer = std::to_string(chain.at("layer_ids")[0].get<int>());
    std::set<int> keep;
    for (int c : pj.at("kept_channels").at(layer)) keep.insert(c);
    for (const auto& g : chain.at("groups")) {
      if (keep.count(g.at("channels")[0].get<int>())) kept.push_back(g.at("group_id"));
    }
  }
  CHECK(nlohmann::json(kept) == oj.at("kept_item_ids"));

  const auto again = run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores,
                          "--budget-ms", "0.007", "--group-size", "1"});
  CHECK(again.out == slurp(out));
}

TEST_CASE("plan with the full budget keeps everything") {
  const auto f = fixture();
  const auto r = run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores,
                      "--budget-fraction", "1.0"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("kept_counts").at("0") == 3);
  CHECK(j.at("kept_counts").at("1") == 3);
  CHECK(j.at("final").at("speedup") == 1.0);
}

TEST_CASE("plan below the mandatory cost exits 2") {
  const auto f = fixture(true);
  const auto r = run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores,
                      "--budget-ms", "0.007", "--group-size", "1"});
  CHECK(r.code == kExitInfeasible);
}

TEST_CASE("I/O and validation failures map to exit codes") {
  const auto f = fixture();
  CHECK(run({"oracle", "--instance", "/nonexistent/i.json"}).code == kExitIo);
  const auto bad = put("bad.json", R"({"layers": [], "bogus": 1})");
  CHECK(run({"plan", "--spec", bad, "--lut", f.lut, "--scores", f.scores, "--budget-ms", "1"})
            .code == kExitValidation);
  CHECK(run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores}).code ==
        kExitValidation);
  CHECK(run({"oracle", "--instance", f.instance, "--solver", "greedy"}).code ==
        kExitValidation);
  const auto broken = put("broken.json", "{not json");
  CHECK(run({"oracle", "--instance", broken}).code == kExitValidation);
}

TEST_CASE("gen-lut, gen-trace, run and report") {
  const auto spec = put("toy_spec.json",
                        spec_to_json(latprune::testing::chain_spec({12, 10, 8})).dump());
  const auto params = put("params.json",
                          R"({"base_ms": 0.002, "slope_ms": 0.001, "step_in": 4, "step_out": 4})");
  const auto lut = (workdir() / "toy.csv").string();
  REQUIRE(run({"gen-lut", "--spec", spec, "--params", params, "--out", lut}).code == kExitOk);
  CHECK(slurp(lut).rfind("layer_id,in_channels,out_channels,latency_ms\n", 0) == 0);

  const auto trace = (workdir() / "toy.jsonl").string();
  REQUIRE(run({"gen-trace", "--spec", spec, "--steps", "12", "--seed", "5", "--out", trace})
              .code == kExitOk);
  const auto trace2 = run({"gen-trace", "--spec", spec, "--steps", "12", "--seed", "5"});
  CHECK(trace2.out == slurp(trace));

  const auto cfg = put("cfg.json", nlohmann::json({{"target_fraction", 0.5},
                                                   {"steps", 3},
                                                   {"window", 4},
                                                   {"spec", spec},
                                                   {"lut", lut},
                                                   {"trace", trace}})
                                       .dump());
  const auto report = (workdir() / "report.json").string();
  REQUIRE(run({"run", "--config", cfg, "--out", report}).code == kExitOk);
  const auto rj = nlohmann::json::parse(slurp(report));
  CHECK(rj.at("milestones").size() == 3);
  CHECK(rj.at("final").at("latency_ms").get<double>() <=
        0.5 * rj.at("dense").at("latency_ms").get<double>());

  const auto two = run({"run", "--config", cfg, "--steps", "2", "--window", "6"});
  REQUIRE(two.code == kExitOk);
  CHECK(nlohmann::json::parse(two.out).at("milestones").size() == 2);
  CHECK(run({"run", "--config", cfg, "--steps", "4"}).code == kExitValidation);

  const auto summary = run({"report", "--plan", report});
  REQUIRE(summary.code == kExitOk);
  CHECK(nlohmann::json::parse(summary.out).contains("kept_channels_total"));
  CHECK(run({"report", "--plan", report, "--groups"}).code == kExitValidation);

  const auto f = fixture();
  const auto plan = (workdir() / "plan_groups.json").string();
  REQUIRE(run({"plan", "--spec", f.spec, "--lut", f.lut, "--scores", f.scores, "--budget-ms",
               "0.007", "--group-size", "1", "--out", plan})
              .code == kExitOk);
  const auto groups = run({"report", "--plan", plan, "--groups"});
  REQUIRE(groups.code == kExitOk);
  CHECK(nlohmann::json::parse(groups.out).at("total_groups") == 6);
}
