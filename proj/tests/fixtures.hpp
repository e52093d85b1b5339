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

#ifndef LATPRUNE_TESTS_FIXTURES_HPP_
#define LATPRUNE_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "latprune/knapsack.hpp"
#include "latprune/latency.hpp"
#include "latprune/netmodel.hpp"

namespace latprune::testing {

inline LayerSpec conv(int id, int in, int out, int k, int hw, std::vector<int> preds) {
  LayerSpec l;
  l.id = id;
  l.name = "l" + std::to_string(id);
  l.kernel_size = k;
  l.in_channels = in;
  l.out_channels = out;
  l.out_spatial = {hw, hw};
  l.predecessor_ids = std::move(preds);
  return l;
}

// Chain of `widths.size()` convs on an 8x8 map, input 3 channels.
inline NetworkSpec chain_spec(const std::vector<int>& widths, int k = 3) {
  NetworkSpec s;
  s.input_channels = 3;
  int in = 3;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    std::vector<int> preds;
    if (i > 0) preds.push_back(static_cast<int>(i) - 1);
    s.layers.push_back(conv(static_cast<int>(i), in, widths[i], k, 8, preds));
    in = widths[i];
  }
  return s;
}

inline StaircaseParams stair(double base, double slope, int sin, int sout,
                             double noise = 0.0, std::uint64_t seed = 0) {
  StaircaseParams p;
  p.base_ms = base;
  p.slope_ms = slope;
  p.step_in = sin;
  p.step_out = sout;
  p.noise_amplitude_ms = noise;
  p.noise_seed = seed;
  return p;
}

// Chains given as per-item (importance, cost) lists; ids run across chains.
inline std::vector<Item> make_chains(
    const std::vector<std::vector<std::pair<double, std::int64_t>>>& chains) {
  std::vector<Item> items;
  int id = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t r = 0; r < chains[c].size(); ++r) {
      Item it;
      it.item_id = id;
      it.importance = chains[c][r].first;
      it.cost = chains[c][r].second;
      it.chain_id = static_cast<int>(c);
      it.rank_position = static_cast<int>(r) + 1;
      if (r > 0) it.preceding_item_id = id - 1;
      items.push_back(it);
      ++id;
    }
  }
  return items;
}

// The two-chain instance with a known optimum of 22 at budget 7.
inline std::vector<Item> six_item_fixture() {
  return make_chains({{{9, 4}, {5, 1}, {1, 3}}, {{8, 2}, {6, 2}, {2, 2}}});
}

struct RandomInstance {
  std::vector<Item> items;
  std::int64_t budget = 0;
  std::int64_t total_cost = 0;
};

// Up to 4 chains of up to 6 items; costs in [lo, hi]; descending importance
// within a chain.
inline RandomInstance random_instance(std::mt19937_64& rng, std::int64_t lo = 0,
                                      std::int64_t hi = 20) {
  std::uniform_int_distribution<int> nchains(1, 4), nitems(1, 6);
  std::uniform_int_distribution<std::int64_t> cost(lo, hi);
  std::uniform_real_distribution<double> imp(0.0, 10.0);
  std::vector<std::vector<std::pair<double, std::int64_t>>> chains(
      static_cast<std::size_t>(nchains(rng)));
  RandomInstance out;
  for (auto& c : chains) {
    std::vector<double> is(static_cast<std::size_t>(nitems(rng)));
    for (double& v : is) v = imp(rng);
    std::sort(is.rbegin(), is.rend());
    for (double v : is) {
      const std::int64_t k = cost(rng);
      c.emplace_back(v, k);
      out.total_cost += k;
    }
  }
  out.items = make_chains(chains);
  std::uniform_int_distribution<std::int64_t> b(0, std::max<std::int64_t>(out.total_cost, 0));
  out.budget = b(rng);
  return out;
}

// Sum of kept items' costs recomputed per chain from prefix lengths.
inline std::int64_t prefix_cost(const std::vector<Item>& items, const Solution& s) {
  return kept_cost(items, s.kept_item_ids);
}

// Average ranks, ties share the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace latprune::testing

#endif  // LATPRUNE_TESTS_FIXTURES_HPP_
