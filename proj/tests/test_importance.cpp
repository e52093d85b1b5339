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

#include <algorithm>
#include <limits>
#include <vector>

#include "doctest.h"
#include "latprune/error.hpp"
#include "latprune/importance.hpp"

using namespace latprune;

namespace {

BNSnapshot one_layer(std::vector<double> g, std::vector<double> b, std::vector<double> gg,
                     std::vector<double> gb, int step = 0) {
  BNSnapshot s;
  s.step = step;
  s.layers[0] = BNLayerStats{std::move(g), std::move(b), std::move(gg), std::move(gb)};
  return s;
}

}  // namespace

TEST_CASE("neuron_importance examples") {
  CHECK(neuron_importance(0.5, 0.1, 0.2, -1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(neuron_importance(3.0, -2.0, 0.0, 0.0) == 0.0);
  CHECK(neuron_importance(1.0, 0.5, 0.3, 0.4) == doctest::Approx(0.5));
  CHECK_THROWS_AS(neuron_importance(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0),
                  ValidationError);
  CHECK_THROWS_AS(neuron_importance(0, std::numeric_limits<double>::infinity(), 0, 0),
                  ValidationError);
}

TEST_CASE("neuron_importance sign symmetry") {
  for (double g : {-1.5, 0.3}) {
    for (double b : {0.2, -0.7}) {
      CHECK(neuron_importance(g, b, 0.11, -0.4) == neuron_importance(-g, -b, -0.11, 0.4));
    }
  }
}

TEST_CASE("accumulate examples") {
  const auto s = one_layer({1.0, 2.0}, {0.5, -1.0}, {0.3, 0.1}, {0.4, 0.2});
  std::vector<BNSnapshot> same = {s, s, s};
  CHECK(accumulate(same).at(0) == snapshot_importance(s).at(0));

  std::vector<BNSnapshot> three = {one_layer({1.0}, {0.0}, {0.1}, {0.0}),
                                   one_layer({1.0}, {0.0}, {0.2}, {0.0}),
                                   one_layer({1.0}, {0.0}, {0.3}, {0.0})};
  CHECK(accumulate(three).at(0)[0] == doctest::Approx(0.2));

  std::vector<BNSnapshot> cancel = {one_layer({1.0}, {0.0}, {0.5}, {0.0}),
                                    one_layer({1.0}, {0.0}, {-0.5}, {0.0})};
  CHECK(accumulate(cancel).at(0)[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(accumulate(std::vector<BNSnapshot>{}), ValidationError);
  std::vector<BNSnapshot> mismatch = {one_layer({1.0}, {0.0}, {0.5}, {0.0}),
                                      one_layer({1.0, 1.0}, {0.0, 0.0}, {0.5, 0.5}, {0.0, 0.0})};
  CHECK_THROWS_AS(accumulate(mismatch), ValidationError);
}

TEST_CASE("accumulate is order independent") {
  std::vector<BNSnapshot> w = {one_layer({1.0, 0.2}, {0.1, 0.3}, {0.7, -0.1}, {0.2, 0.9}),
                               one_layer({0.9, 0.4}, {0.0, 0.3}, {-0.3, 0.5}, {0.1, 0.0}),
                               one_layer({1.2, 0.1}, {0.2, 0.1}, {0.4, 0.2}, {-0.6, 0.3})};
  const auto ref = accumulate(w).at(0);
  std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) {
    return a.layers.at(0).gamma[0] < b.layers.at(0).gamma[0];
  });
  do {
    const auto got = accumulate(w).at(0);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]));
  } while (std::next_permutation(w.begin(), w.end(), [](const auto& a, const auto& b) {
    return a.layers.at(0).gamma[0] < b.layers.at(0).gamma[0];
  }));
}

TEST_CASE("rank_layer examples") {
  const std::vector<double> s = {0.2, 0.9, 0.5};
  const auto r = rank_layer(s);
  CHECK(r.order == std::vector<int>{1, 2, 0});
  REQUIRE(r.prefix_importance.size() == 3);
  CHECK(r.prefix_importance[0] == doctest::Approx(0.9));
  CHECK(r.prefix_importance[1] == doctest::Approx(1.4));
  CHECK(r.prefix_importance[2] == doctest::Approx(1.6));

  const std::vector<double> eq(5, 0.25);
  CHECK(rank_layer(eq).order == std::vector<int>{0, 1, 2, 3, 4});

  const std::vector<double> one = {0.7};
  CHECK(rank_layer(one).order == std::vector<int>{0});
  CHECK(rank_layer(one).prefix_importance == std::vector<double>{0.7});

  CHECK_THROWS_AS(rank_layer(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(rank_layer(std::vector<double>{0.1, -0.2}), ValidationError);
}

TEST_CASE("rank_layer keeps surviving channel ids and monotone sequences") {
  const std::vector<double> s = {0.3, 0.3, 0.1, 0.8};
  const std::vector<int> ch = {2, 5, 7, 9};
  const auto r = rank_layer(s, ch);
  CHECK(r.order == std::vector<int>{9, 2, 5, 7});
  for (std::size_t i = 1; i < r.importance.size(); ++i) {
    CHECK(r.importance[i] <= r.importance[i - 1]);
    CHECK(r.prefix_importance[i] >= r.prefix_importance[i - 1]);
  }
}

TEST_CASE("trace and score JSON round trips") {
  std::vector<BNSnapshot> w = {one_layer({1.0, 0.2}, {0.1, 0.3}, {0.7, -0.1}, {0.2, 0.9}, 0),
                               one_layer({0.1 + 0.2, 1e-300}, {-0.0, 0.3}, {3.0, 5.0}, {0.1, 0.0}, 1)};
  const auto text = format_trace(w);
  const auto back = parse_trace(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].step == 1);
  CHECK(back[1].layers.at(0).gamma == w[1].layers.at(0).gamma);
  CHECK(format_trace(back) == text);
  CHECK_THROWS_AS(parse_trace("{\"step\":0}\n"), ValidationError);
  CHECK_THROWS_AS(parse_trace("not json\n"), ValidationError);

  ImportanceScores sc = {{0, {0.5, 0.25}}, {4, {1.0}}};
  CHECK(scores_from_json(scores_to_json(sc)) == sc);
}
