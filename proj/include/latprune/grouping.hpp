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

#ifndef LATPRUNE_GROUPING_HPP_
#define LATPRUNE_GROUPING_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "latprune/importance.hpp"
#include "latprune/knapsack.hpp"
#include "latprune/latency.hpp"
#include "latprune/netmodel.hpp"

namespace latprune {

// A block of consecutively ranked channel indices pruned as one unit. In a
// coupled chain the same indices are removed from every member layer.
struct NeuronGroup {
  int group_id = 0;
  int chain_id = 0;
  int rank_position = 1;
  std::vector<int> channels;  // original channel indices, ranked
  std::vector<std::pair<int, int>> members;  // (layer_id, channel)
  double importance = 0.0;
  double cost_ms = 0.0;
  std::int64_t cost_scaled = 0;
  std::optional<int> preceding_group_id;
  bool mandatory = false;
};

struct GroupChain {
  int chain_id = 0;
  std::vector<int> layer_ids;
  std::map<int, int> in_channels;  // p_in per member layer at build time
  int step_size = 1;
  std::vector<int> group_ids;  // by rank position
  int mandatory_groups = 0;
};

struct GroupedInstance {
  std::vector<NeuronGroup> groups;  // indexed by group_id
  std::vector<GroupChain> chains;   // indexed by chain_id

  std::size_t total_group_count() const { return groups.size(); }
};

struct GroupingOptions {
  // Fixed group size for every chain instead of detected step sizes.
  std::optional<int> group_size_override;
  int step_fallback = kDefaultStepFallback;
  double jump_tolerance_ms = 1e-9;
};

// Rankings keyed by layer id, covering each layer's surviving channels.
using LayerRankings = std::map<int, LayerRanking>;

// Chains are coupling sets plus singleton chains for uncoupled layers,
// ordered by the spec position of their first layer. With `table` null no
// step sizes are detected (group size is the override, else 1) and costs
// are left at zero for the caller to fill in.
GroupedInstance build_groups(const NetworkSpec& spec, const LayerRankings& rankings,
                             const LatencyTable* table,
                             const ChannelAssignment& current,
                             const GroupingOptions& options = {});

// Entry k: summed member-layer latency with the chain's first k groups kept,
// read directly from the table. Entry 0 is 0.
std::vector<double> group_chain_cumulative_cost(const GroupedInstance& inst,
                                                const GroupChain& chain,
                                                const LatencyTable& table);
// Same on scaled integers: sum of to_int_cost(T(p_in, prefix)).
std::vector<std::int64_t> group_chain_cumulative_cost_scaled(
    const GroupedInstance& inst, const GroupChain& chain, const LatencyTable& table);

// Non-mandatory groups as knapsack items (item_id == group_id), with rank
// positions re-based past the pre-committed mandatory prefix.
struct KnapsackView {
  std::vector<Item> items;
  std::int64_t mandatory_cost = 0;
};
KnapsackView knapsack_items(const GroupedInstance& inst);

nlohmann::json groups_to_json(const GroupedInstance& inst);

}  // namespace latprune

#endif  // LATPRUNE_GROUPING_HPP_
