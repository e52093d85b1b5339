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

#include "latprune/grouping.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "latprune/error.hpp"

namespace latprune {

namespace {

// Surviving channels of `layer`, ascending, with their scores.
std::map<int, double> layer_scores(const LayerSpec& layer,
                                   const LayerRankings& rankings,
                                   const ChannelAssignment& current) {
  std::map<int, double> out;
  auto it = rankings.find(layer.id);
  if (it != rankings.end()) {
    for (std::size_t k = 0; k < it->second.order.size(); ++k) {
      out[it->second.order[k]] = it->second.importance[k];
    }
  } else if (!layer.prunable) {
    // Unprunable layers survive whole; their scores only label groups.
    auto ch = current.channels.find(layer.id);
    if (ch != current.channels.end()) {
      for (int c : ch->second) out[c] = 0.0;
    } else {
      for (int c = 0; c < current.count(layer); ++c) out[c] = 0.0;
    }
  } else {
    throw ValidationError("no importance ranking for layer " + std::to_string(layer.id));
  }
  if (static_cast<int>(out.size()) != current.count(layer)) {
    throw ValidationError("ranking of layer " + std::to_string(layer.id) +
                          " does not match its current channel count");
  }
  return out;
}

}  // namespace

GroupedInstance build_groups(const NetworkSpec& spec, const LayerRankings& rankings,
                             const LatencyTable* table,
                             const ChannelAssignment& current,
                             const GroupingOptions& options) {
  if (options.group_size_override && *options.group_size_override < 1) {
    throw ValidationError("group size override must be >= 1");
  }
  // Chain membership, ordered by first appearance in the spec.
  const auto coupled = coupling_index(spec);
  std::vector<std::vector<int>> chain_layers;
  std::map<std::size_t, std::size_t> coupling_to_chain;
  for (const auto& l : spec.layers) {
    auto c = coupled.find(l.id);
    if (c == coupled.end()) {
      chain_layers.push_back({l.id});
    } else if (auto ex = coupling_to_chain.find(c->second);
               ex != coupling_to_chain.end()) {
      chain_layers[ex->second].push_back(l.id);
    } else {
      coupling_to_chain[c->second] = chain_layers.size();
      chain_layers.push_back({l.id});
    }
  }

  GroupedInstance inst;
  for (std::size_t ci = 0; ci < chain_layers.size(); ++ci) {
    GroupChain chain;
    chain.chain_id = static_cast<int>(ci);
    chain.layer_ids = chain_layers[ci];

    // Aggregate importance per channel index across coupled layers.
    std::map<int, double> agg;
    int min_keep = 0;
    std::optional<int> width;
    for (int id : chain.layer_ids) {
      const auto& l = spec.layer(id);
      const int count = current.count(l);
      if (width && *width != count) {
        throw ValidationError("coupled layers have unequal current counts (layer " +
                              std::to_string(id) + ")");
      }
      width = count;
      auto scores = layer_scores(l, rankings, current);
      if (!agg.empty()) {
        bool same = scores.size() == agg.size() &&
                    std::equal(scores.begin(), scores.end(), agg.begin(),
                               [](const auto& a, const auto& b) { return a.first == b.first; });
        if (!same) {
          throw ValidationError("coupled layers have different surviving channels (layer " +
                                std::to_string(id) + ")");
        }
      }
      for (const auto& [c, s] : scores) agg[c] += s;
      min_keep = std::max(min_keep, l.min_keep);
      chain.in_channels[id] = resolve_in_channels(spec, current, l);
    }

    std::vector<std::pair<int, double>> ranked(agg.begin(), agg.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;  // map order already ascending by index
    });

    int s = 1;
    if (options.group_size_override) {
      s = *options.group_size_override;
    } else if (table != nullptr) {
      for (int id : chain.layer_ids) {
        s = std::max(s, detect_step_size(*table, id, chain.in_channels[id],
                                         options.step_fallback,
                                         options.jump_tolerance_ms));
      }
    }
    // A chain with nothing to prune is a single mandatory group.
    if (min_keep >= static_cast<int>(ranked.size())) s = std::max<int>(1, static_cast<int>(ranked.size()));
    chain.step_size = s;

    const int n = static_cast<int>(ranked.size());
    int kept_before = 0;
    for (int start = 0; start < n; start += s) {
      const int end = std::min(n, start + s);
      NeuronGroup g;
      g.group_id = static_cast<int>(inst.groups.size());
      g.chain_id = chain.chain_id;
      g.rank_position = static_cast<int>(chain.group_ids.size()) + 1;
      if (!chain.group_ids.empty()) g.preceding_group_id = chain.group_ids.back();
      for (int k = start; k < end; ++k) {
        g.channels.push_back(ranked[k].first);
        g.importance += ranked[k].second;
      }
      for (int id : chain.layer_ids) {
        for (int c : g.channels) g.members.emplace_back(id, c);
        if (table != nullptr) {
          const int p_in = chain.in_channels[id];
          const double hi = lut_query(*table, id, p_in, end);
          const double lo = lut_query(*table, id, p_in, start);
          g.cost_ms += hi - lo;
          g.cost_scaled += to_int_cost(hi) - to_int_cost(lo);
        }
      }
      g.mandatory = kept_before < min_keep;
      if (g.mandatory) ++chain.mandatory_groups;
      kept_before = end;
      chain.group_ids.push_back(g.group_id);
      inst.groups.push_back(std::move(g));
    }
    inst.chains.push_back(std::move(chain));
  }
  return inst;
}

namespace {

template <typename T, typename F>
std::vector<T> cumulative(const GroupedInstance& inst, const GroupChain& chain,
                          F&& per_layer) {
  std::vector<T> out{T{}};
  int prefix = 0;
  for (int gid : chain.group_ids) {
    prefix += static_cast<int>(inst.groups[gid].channels.size());
    T total{};
    for (int id : chain.layer_ids) total += per_layer(id, chain.in_channels.at(id), prefix);
    out.push_back(total);
  }
  return out;
}

}  // namespace

std::vector<double> group_chain_cumulative_cost(const GroupedInstance& inst,
                                                const GroupChain& chain,
                                                const LatencyTable& table) {
  return cumulative<double>(inst, chain, [&](int id, int p_in, int p) {
    return lut_query(table, id, p_in, p);
  });
}

std::vector<std::int64_t> group_chain_cumulative_cost_scaled(
    const GroupedInstance& inst, const GroupChain& chain, const LatencyTable& table) {
  return cumulative<std::int64_t>(inst, chain, [&](int id, int p_in, int p) {
    return to_int_cost(lut_query(table, id, p_in, p));
  });
}

KnapsackView knapsack_items(const GroupedInstance& inst) {
  KnapsackView view;
  for (const auto& chain : inst.chains) {
    std::optional<int> prev;
    int rank = 0;
    for (int gid : chain.group_ids) {
      const auto& g = inst.groups[gid];
      if (g.mandatory) {
        view.mandatory_cost += g.cost_scaled;
        continue;
      }
      Item it;
      it.item_id = g.group_id;
      it.importance = g.importance;
      it.cost = g.cost_scaled;
      it.chain_id = chain.chain_id;
      it.rank_position = ++rank;
      it.preceding_item_id = prev;
      prev = g.group_id;
      view.items.push_back(it);
    }
  }
  return view;
}

nlohmann::json groups_to_json(const GroupedInstance& inst) {
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : inst.chains) {
    nlohmann::json groups = nlohmann::json::array();
    for (int gid : c.group_ids) {
      const auto& g = inst.groups[gid];
      groups.push_back({{"group_id", g.group_id},
                        {"rank_position", g.rank_position},
                        {"channels", g.channels},
                        {"importance", g.importance},
                        {"cost_ms", g.cost_ms},
                        {"cost_scaled", g.cost_scaled},
                        {"preceding_group_id", g.preceding_group_id
                                                   ? nlohmann::json(*g.preceding_group_id)
                                                   : nlohmann::json(nullptr)},
                        {"mandatory", g.mandatory}});
    }
    chains.push_back({{"chain_id", c.chain_id},
                      {"layer_ids", c.layer_ids},
                      {"step_size", c.step_size},
                      {"groups", groups}});
  }
  return {{"total_groups", inst.total_group_count()}, {"chains", chains}};
}

}  // namespace latprune
