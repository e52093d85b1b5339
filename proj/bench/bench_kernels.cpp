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

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <vector>

#include "latprune/knapsack.hpp"
#include "latprune/latency.hpp"
#include "latprune/netmodel.hpp"

namespace {

std::vector<latprune::Item> make_items(int chains, int per_chain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> imp(0.0, 1.0);
  std::uniform_int_distribution<int> cost(-5, 40);
  std::vector<latprune::Item> items;
  int id = 0;
  for (int c = 0; c < chains; ++c) {
    for (int r = 1; r <= per_chain; ++r) {
      latprune::Item it;
      it.item_id = id;
      it.importance = imp(rng);
      it.cost = cost(rng);
      it.chain_id = c;
      it.rank_position = r;
      if (r > 1) it.preceding_item_id = id - 1;
      items.push_back(it);
      ++id;
    }
  }
  return items;
}

void BM_SolveExact(benchmark::State& state) {
  const auto items = make_items(static_cast<int>(state.range(0)), 16, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(latprune::solve_exact(items, 4000));
  }
}

void BM_SolveExactSerial(benchmark::State& state) {
  const auto items = make_items(static_cast<int>(state.range(0)), 16, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(latprune::solve_exact_serial(items, 4000));
  }
}

void BM_GenLut(benchmark::State& state) {
  const auto spec = latprune::builtin_resnet50();
  latprune::StaircaseParams p;
  p.noise_amplitude_ms = 1e-4;
  p.noise_seed = 3;
  const std::map<int, latprune::StaircaseParams> none;
  for (auto _ : state) {
    benchmark::DoNotOptimize(latprune::gen_staircase_lut(spec, none, p));
  }
}

void BM_GenLutSerial(benchmark::State& state) {
  const auto spec = latprune::builtin_resnet50();
  latprune::StaircaseParams p;
  p.noise_amplitude_ms = 1e-4;
  p.noise_seed = 3;
  const std::map<int, latprune::StaircaseParams> none;
  for (auto _ : state) {
    benchmark::DoNotOptimize(latprune::gen_staircase_lut_serial(spec, none, p));
  }
}

}  // namespace

BENCHMARK(BM_SolveExact)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveExactSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenLut)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_GenLutSerial)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
