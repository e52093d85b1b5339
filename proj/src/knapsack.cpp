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

#include "latprune/knapsack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "io_util.hpp"
#include "latprune/error.hpp"

namespace latprune {

std::int64_t to_int_cost(double value_ms) {
  if (!std::isfinite(value_ms)) throw ValidationError("non-finite latency value");
  const double scaled = std::round(value_ms * kLatencyScale);
  // 2^63 is exactly representable; anything at or beyond it overflows.
  constexpr double kLimit = 9223372036854775808.0;
  if (scaled >= kLimit || scaled < -kLimit) {
    throw ValidationError("scaled latency overflows int64");
  }
  return static_cast<std::int64_t>(scaled);
}

std::vector<std::int64_t> to_int_costs(std::span<const double> values_ms) {
  std::vector<std::int64_t> out;
  out.reserve(values_ms.size());
  for (double v : values_ms) out.push_back(to_int_cost(v));
  return out;
}

namespace {

struct ChainTable {
  int chain_id = 0;
  std::vector<const Item*> items;          // by rank_position
  std::vector<std::int64_t> prefix_cost;   // size items+1, [0] = 0
  std::vector<double> prefix_importance;   // size items+1, [0] = 0
};

std::vector<ChainTable> build_chains(std::span<const Item> items) {
  std::set<int> ids;
  std::map<int, std::vector<const Item*>> by_chain;
  for (const auto& it : items) {
    if (!ids.insert(it.item_id).second) {
      throw ValidationError("duplicate item_id " + std::to_string(it.item_id));
    }
    if (!std::isfinite(it.importance)) {
      throw ValidationError("non-finite importance on item " +
                            std::to_string(it.item_id));
    }
    by_chain[it.chain_id].push_back(&it);
  }
  std::vector<ChainTable> chains;
  for (auto& [cid, members] : by_chain) {
    std::sort(members.begin(), members.end(), [](const Item* a, const Item* b) {
      return a->rank_position < b->rank_position;
    });
    ChainTable t;
    t.chain_id = cid;
    t.prefix_cost.push_back(0);
    t.prefix_importance.push_back(0.0);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Item* it = members[k];
      const std::string tag = "item " + std::to_string(it->item_id);
      if (it->rank_position != static_cast<int>(k) + 1) {
        throw ValidationError(tag + ": chain " + std::to_string(cid) +
                              " rank positions must be 1..n without gaps");
      }
      if (k == 0 && it->preceding_item_id) {
        throw ValidationError(tag + ": rank-1 item cannot have a predecessor");
      }
      if (k > 0 && it->preceding_item_id != members[k - 1]->item_id) {
        throw ValidationError(tag + ": preceding_item_id must name rank " +
                              std::to_string(k));
      }
      t.prefix_cost.push_back(t.prefix_cost.back() + it->cost);
      t.prefix_importance.push_back(t.prefix_importance.back() + it->importance);
    }
    t.items = std::move(members);
    chains.push_back(std::move(t));
  }
  return chains;
}

struct Cell {
  double importance = 0.0;
  std::int64_t cost = 0;
};

// Strictly better: more importance beyond a relative tie band, or a tie on
// importance with lower cost.
bool better(double imp_a, std::int64_t cost_a, double imp_b, std::int64_t cost_b) {
  const double tol =
      1e-12 * std::max({1.0, std::fabs(imp_a), std::fabs(imp_b)});
  if (imp_a > imp_b + tol) return true;
  if (imp_a < imp_b - tol) return false;
  return cost_a < cost_b;
}

// Prefix options of one chain, shifted so every weight is non-negative.
struct ChainOptions {
  std::vector<std::int64_t> weight;  // prefix_cost - min prefix cost
  std::int64_t shift = 0;            // min prefix cost (<= 0)
};

ChainOptions chain_options(const ChainTable& c) {
  ChainOptions o;
  o.shift = *std::min_element(c.prefix_cost.begin(), c.prefix_cost.end());
  for (auto pc : c.prefix_cost) o.weight.push_back(pc - o.shift);
  return o;
}

// One dp cell: best prefix of this chain combined with the suffix row.
inline void relax_cell(const ChainTable& chain, const ChainOptions& opt,
                       const std::vector<Cell>& next, std::int64_t b,
                       Cell& out, int& choice) {
  bool have = false;
  for (std::size_t k = 0; k < opt.weight.size(); ++k) {
    if (opt.weight[k] > b) continue;
    const Cell& rest = next[static_cast<std::size_t>(b - opt.weight[k])];
    const double imp = chain.prefix_importance[k] + rest.importance;
    const std::int64_t cost = chain.prefix_cost[k] + rest.cost;
    if (!have || better(imp, cost, out.importance, out.cost)) {
      out = {imp, cost};
      choice = static_cast<int>(k);
      have = true;
    }
  }
}

void relax_row_serial(const ChainTable& chain, const ChainOptions& opt,
                      const std::vector<Cell>& next, std::vector<Cell>& row,
                      int* choice) {
  const auto cap = static_cast<std::int64_t>(row.size());
  for (std::int64_t b = 0; b < cap; ++b) {
    relax_cell(chain, opt, next, b, row[b], choice[b]);
  }
}

void relax_row_parallel(const ChainTable& chain, const ChainOptions& opt,
                        const std::vector<Cell>& next, std::vector<Cell>& row,
                        int* choice) {
  const auto cap = static_cast<std::int64_t>(row.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < cap; ++b) {
    relax_cell(chain, opt, next, b, row[b], choice[b]);
  }
}

Solution assemble(const std::vector<ChainTable>& chains,
                  const std::vector<int>& prefix_len) {
  Solution s;
  // Right-nested sum, the same association the chain dp uses.
  double imp = 0.0;
  for (std::size_t i = chains.size(); i-- > 0;) {
    imp = chains[i].prefix_importance[prefix_len[i]] + imp;
    s.total_cost += chains[i].prefix_cost[prefix_len[i]];
    for (int k = 0; k < prefix_len[i]; ++k) {
      s.kept_item_ids.push_back(chains[i].items[k]->item_id);
    }
  }
  s.total_importance = imp;
  std::sort(s.kept_item_ids.begin(), s.kept_item_ids.end());
  return s;
}

Solution solve_chain_dp(std::span<const Item> items, std::int64_t budget,
                        bool parallel) {
  if (budget < 0) throw ValidationError("budget must be non-negative");
  const auto chains = build_chains(items);
  if (chains.empty()) return {};

  std::vector<ChainOptions> opts;
  std::int64_t shifted_budget = budget;
  std::int64_t max_weight = 0;
  for (const auto& c : chains) {
    opts.push_back(chain_options(c));
    shifted_budget -= opts.back().shift;
    max_weight += *std::max_element(opts.back().weight.begin(),
                                    opts.back().weight.end());
  }
  // Capacity beyond the heaviest combination changes nothing.
  const std::int64_t cap = std::min(shifted_budget, max_weight) + 1;

  const std::size_t m = chains.size();
  std::vector<int> choice(m * static_cast<std::size_t>(cap), 0);
  std::vector<Cell> next(static_cast<std::size_t>(cap));
  std::vector<Cell> row(static_cast<std::size_t>(cap));
  for (std::size_t i = m; i-- > 0;) {
    int* choice_row = choice.data() + i * static_cast<std::size_t>(cap);
    if (parallel) {
      relax_row_parallel(chains[i], opts[i], next, row, choice_row);
    } else {
      relax_row_serial(chains[i], opts[i], next, row, choice_row);
    }
    std::swap(next, row);
  }

  std::vector<int> prefix_len(m);
  std::int64_t b = cap - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const int k = choice[i * static_cast<std::size_t>(cap) + b];
    prefix_len[i] = k;
    b -= opts[i].weight[k];
  }
  return assemble(chains, prefix_len);
}

}  // namespace

Solution solve_exact(std::span<const Item> items, std::int64_t budget) {
  return solve_chain_dp(items, budget, /*parallel=*/true);
}

Solution solve_exact_serial(std::span<const Item> items, std::int64_t budget) {
  return solve_chain_dp(items, budget, /*parallel=*/false);
}

Solution brute_force(std::span<const Item> items, std::int64_t budget) {
  if (items.size() > kMaxBruteForceItems) {
    throw ValidationError("brute_force supports at most " +
                          std::to_string(kMaxBruteForceItems) + " items");
  }
  if (budget < 0) throw ValidationError("budget must be non-negative");
  const auto chains = build_chains(items);
  const std::size_t m = chains.size();
  std::vector<int> len(m, 0);
  std::vector<int> best_len;
  double best_imp = 0.0;
  std::int64_t best_cost = 0;
  // Odometer with the last chain fastest: visits prefix vectors in
  // lexicographic order, so keeping the first optimum breaks ties.
  while (true) {
    double imp = 0.0;
    std::int64_t cost = 0;
    for (std::size_t i = m; i-- > 0;) {
      imp = chains[i].prefix_importance[len[i]] + imp;
      cost += chains[i].prefix_cost[len[i]];
    }
    if (cost <= budget &&
        (best_len.empty() || better(imp, cost, best_imp, best_cost))) {
      best_len = len;
      best_imp = imp;
      best_cost = cost;
    }
    bool done = true;
    for (std::size_t i = m; i-- > 0;) {
      if (len[i] < static_cast<int>(chains[i].items.size())) {
        ++len[i];
        done = false;
        break;
      }
      len[i] = 0;
    }
    if (done) break;
  }
  if (best_len.empty()) return {};
  return assemble(chains, best_len);
}

Solution solve_paper(std::span<const Item> items, std::int64_t budget) {
  if (budget < 0) throw ValidationError("budget must be non-negative");
  const auto chains = build_chains(items);
  const std::size_t n_items = items.size();
  if (n_items == 0) return {};

  // Descending importance; equal importance keeps chain then rank order so a
  // predecessor precedes its successor.
  std::vector<const Item*> order;
  for (const auto& it : items) order.push_back(&it);
  std::stable_sort(order.begin(), order.end(), [](const Item* a, const Item* b) {
    if (a->importance != b->importance) return a->importance > b->importance;
    if (a->chain_id != b->chain_id) return a->chain_id < b->chain_id;
    return a->rank_position < b->rank_position;
  });
  std::map<int, std::size_t> pos;
  for (std::size_t n = 0; n < n_items; ++n) pos[order[n]->item_id] = n;

  std::int64_t min_cost = 0;
  std::int64_t positive_sum = 0;
  for (const auto* it : order) {
    min_cost = std::min(min_cost, it->cost);
    positive_sum += std::max<std::int64_t>(it->cost, 0);
  }
  const std::int64_t cap_budget = std::min(budget, positive_sum);
  // Extended axis: a negative item may be added to a set heavier than C.
  const std::int64_t cap = cap_budget - min_cost + 1;
  const auto ucap = static_cast<std::size_t>(cap);

  std::vector<double> dp(ucap, 0.0);
  std::vector<double> fresh(ucap, 0.0);
  std::vector<std::uint8_t> keep(n_items * ucap, 0);
  for (std::size_t n = 0; n < n_items; ++n) {
    const Item& it = *order[n];
    const std::uint8_t* pred_row = nullptr;
    bool pred_pending = false;
    if (it.preceding_item_id) {
      const std::size_t p = pos.at(*it.preceding_item_id);
      if (p < n) pred_row = keep.data() + p * ucap;
      else pred_pending = true;  // predecessor not decided yet: cannot keep
    }
    std::uint8_t* keep_row = keep.data() + n * ucap;
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < cap; ++c) {
      const std::int64_t prev = c - it.cost;
      const double v_prune = dp[c];
      bool take = false;
      if (prev >= 0 && prev < cap && !pred_pending) {
        const double v_keep = it.importance + dp[prev];
        const bool pred_ok = pred_row == nullptr || pred_row[prev] != 0;
        take = v_keep > v_prune && pred_ok;
        if (take) fresh[c] = v_keep;
      }
      if (!take) fresh[c] = v_prune;
      keep_row[c] = take ? 1 : 0;
    }
    std::swap(dp, fresh);
  }

  std::set<int> kept;
  std::int64_t c = cap_budget;
  for (std::size_t n = n_items; n-- > 0;) {
    if (keep[n * ucap + static_cast<std::size_t>(c)]) {
      kept.insert(order[n]->item_id);
      c -= order[n]->cost;
    }
  }

  // Repair: longest kept prefix per chain, then shed tails until feasible.
  std::vector<int> len(chains.size(), 0);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    while (len[i] < static_cast<int>(chains[i].items.size()) &&
           kept.count(chains[i].items[len[i]]->item_id)) {
      ++len[i];
    }
  }
  auto total_cost = [&] {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < chains.size(); ++i) t += chains[i].prefix_cost[len[i]];
    return t;
  };
  while (total_cost() > budget) {
    std::size_t drop = chains.size();
    for (std::size_t i = 0; i < chains.size(); ++i) {
      if (len[i] == 0) continue;
      if (drop == chains.size() ||
          chains[i].items[len[i] - 1]->importance <
              chains[drop].items[len[drop] - 1]->importance) {
        drop = i;
      }
    }
    --len[drop];
  }
  return assemble(chains, len);
}

bool is_prefix_closed(std::span<const Item> items,
                      std::span<const int> kept_item_ids) {
  std::set<int> kept(kept_item_ids.begin(), kept_item_ids.end());
  for (const auto& it : items) {
    if (kept.count(it.item_id) && it.preceding_item_id &&
        !kept.count(*it.preceding_item_id)) {
      return false;
    }
  }
  return true;
}

std::int64_t kept_cost(std::span<const Item> items,
                       std::span<const int> kept_item_ids) {
  std::set<int> kept(kept_item_ids.begin(), kept_item_ids.end());
  std::int64_t total = 0;
  for (const auto& it : items) {
    if (kept.count(it.item_id)) total += it.cost;
  }
  return total;
}

KnapsackInstance instance_from_json(const nlohmann::json& j) {
  using detail::get_field;
  const std::string what = "knapsack instance";
  detail::reject_unknown_keys(j, {"items", "budget"}, what);
  KnapsackInstance inst;
  inst.budget = get_field<std::int64_t>(j, "budget", what);
  if (!j.contains("items") || !j.at("items").is_array()) {
    throw ValidationError(what + ": 'items' must be an array");
  }
  for (const auto& ji : j.at("items")) {
    const std::string iw = "knapsack item";
    detail::reject_unknown_keys(ji,
                                {"item_id", "importance", "cost", "chain_id",
                                 "rank_position", "preceding_item_id"},
                                iw);
    Item it;
    it.item_id = get_field<int>(ji, "item_id", iw);
    it.importance = get_field<double>(ji, "importance", iw);
    it.cost = get_field<std::int64_t>(ji, "cost", iw);
    it.chain_id = get_field<int>(ji, "chain_id", iw);
    it.rank_position = get_field<int>(ji, "rank_position", iw);
    if (ji.contains("preceding_item_id") && !ji.at("preceding_item_id").is_null()) {
      it.preceding_item_id = get_field<int>(ji, "preceding_item_id", iw);
    }
    inst.items.push_back(it);
  }
  return inst;
}

nlohmann::json instance_to_json(const KnapsackInstance& inst) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : inst.items) {
    nlohmann::json ji = {{"item_id", it.item_id},
                         {"importance", it.importance},
                         {"cost", it.cost},
                         {"chain_id", it.chain_id},
                         {"rank_position", it.rank_position}};
    ji["preceding_item_id"] = it.preceding_item_id
                                  ? nlohmann::json(*it.preceding_item_id)
                                  : nlohmann::json(nullptr);
    items.push_back(std::move(ji));
  }
  return {{"items", items}, {"budget", inst.budget}};
}

nlohmann::json solution_to_json(const Solution& s) {
  return {{"kept_item_ids", s.kept_item_ids},
          {"total_importance", s.total_importance},
          {"total_cost", s.total_cost}};
}

}  // namespace latprune
