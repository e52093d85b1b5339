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

#ifndef LATPRUNE_KNAPSACK_HPP_
#define LATPRUNE_KNAPSACK_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace latprune {

// Latencies enter the solvers as integer microsecond-scale units.
inline constexpr double kLatencyScale = 1000.0;
inline constexpr std::size_t kMaxBruteForceItems = 24;

// One knapsack item: a neuron group at `rank_position` (1-based) of its
// chain. `cost` is the scaled latency delta and may be negative on noisy
// tables.
struct Item {
  int item_id = 0;
  double importance = 0.0;
  std::int64_t cost = 0;
  int chain_id = 0;
  int rank_position = 1;
  std::optional<int> preceding_item_id;
};

struct Solution {
  std::vector<int> kept_item_ids;  // ascending
  double total_importance = 0.0;
  std::int64_t total_cost = 0;
};

// round(value * 1000), halves away from zero. Throws ValidationError on
// non-finite input or int64 overflow.
std::int64_t to_int_cost(double value_ms);
std::vector<std::int64_t> to_int_costs(std::span<const double> values_ms);

// Exact chain-prefix optimum (multiple-choice DP over chains). Ties go to
// the smaller cost, then to the lexicographically smallest vector of
// per-chain prefix lengths (chains in ascending chain_id).
Solution solve_exact(std::span<const Item> items, std::int64_t budget);
// Single-threaded reference for solve_exact; identical results.
Solution solve_exact_serial(std::span<const Item> items, std::int64_t budget);

// Per-item dp with the preceding-keep check, extended capacity axis for
// negative costs, then a repair pass that makes the result prefix-closed
// and within budget. Feasible, not necessarily optimal.
Solution solve_paper(std::span<const Item> items, std::int64_t budget);

// Enumerates every combination of prefix lengths. Same tie-break as
// solve_exact. At most kMaxBruteForceItems items.
Solution brute_force(std::span<const Item> items, std::int64_t budget);

// Validation helpers shared by tests and the CLI.
bool is_prefix_closed(std::span<const Item> items,
                      std::span<const int> kept_item_ids);
std::int64_t kept_cost(std::span<const Item> items,
                       std::span<const int> kept_item_ids);

struct KnapsackInstance {
  std::vector<Item> items;
  std::int64_t budget = 0;
};

KnapsackInstance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const KnapsackInstance& inst);
nlohmann::json solution_to_json(const Solution& s);

}  // namespace latprune

#endif  // LATPRUNE_KNAPSACK_HPP_
