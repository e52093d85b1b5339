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

#include "doctest.h"
#include "fixtures.hpp"
#include "latprune/error.hpp"
#include "latprune/netmodel.hpp"

using namespace latprune;
using latprune::testing::chain_spec;
using latprune::testing::conv;

TEST_CASE("total_neurons examples") {
  CHECK(total_neurons(builtin_resnet50()) == 26560);
  CHECK(total_neurons(chain_spec({64})) == 64);
  CHECK(total_neurons(NetworkSpec{}) == 0);
}

TEST_CASE("total_neurons is additive over concatenated layer lists") {
  auto a = chain_spec({8, 12});
  auto b = chain_spec({5, 7, 9});
  NetworkSpec both = a;
  for (auto l : b.layers) {
    l.id += 100;
    for (int& p : l.predecessor_ids) p += 100;
    both.layers.push_back(l);
  }
  CHECK(total_neurons(both) == total_neurons(a) + total_neurons(b));
}

TEST_CASE("network_flops examples") {
  NetworkSpec s;
  s.input_channels = 3;
  s.layers.push_back(conv(0, 3, 16, 3, 8, {}));
  CHECK(network_flops(s, dense_assignment(s)) == 3 * 16 * 9 * 64);

  ChannelAssignment zero;
  zero.kept[0] = 0;
  CHECK(network_flops(s, zero) == 0);

  ChannelAssignment bad;
  bad.kept[7] = 1;
  CHECK_THROWS_AS(network_flops(s, bad), ValidationError);
}

TEST_CASE("builtin ResNet50 dense MACs near 4.1 G") {
  const auto spec = builtin_resnet50();
  const double macs = static_cast<double>(network_flops(spec, dense_assignment(spec)));
  CHECK(macs >= 4.1e9 * 0.98);
  CHECK(macs <= 4.1e9 * 1.02);
}

TEST_CASE("network_flops dense equals per-layer closed form") {
  const auto spec = builtin_resnet50();
  std::int64_t sum = 0;
  for (const auto& l : spec.layers) {
    sum += static_cast<std::int64_t>(l.in_channels) * l.out_channels * l.kernel_size *
           l.kernel_size * l.out_spatial.height * l.out_spatial.width;
  }
  CHECK(network_flops(spec, dense_assignment(spec)) == sum);
}

TEST_CASE("network_flops monotone in every count") {
  const auto spec = chain_spec({6, 5, 4});
  auto a = dense_assignment(spec);
  const auto base = network_flops(spec, a);
  for (const auto& l : spec.layers) {
    auto b = a;
    b.kept[l.id] = l.out_channels - 2;
    CHECK(network_flops(spec, b) <= base);
  }
}

TEST_CASE("group conv divides by groups") {
  NetworkSpec s;
  s.layers.push_back(conv(0, 3, 8, 3, 4, {}));
  auto dw = conv(1, 8, 8, 3, 4, {0});
  dw.kind = LayerKind::kGroupConv;
  s.layers.push_back(dw);
  CHECK(layer_macs(s.layer(1), 8, 8) == 8 * 9 * 16);
}

TEST_CASE("builtin ResNet50 structure") {
  const auto spec = builtin_resnet50();
  CHECK(spec.layers.size() == 53);
  CHECK_FALSE(spec.layers.front().prunable);
  CHECK(spec.layers.front().min_keep == 64);
  CHECK(validate_spec(spec).empty());
  CHECK(spec.couplings.size() == 4);
  const auto steps = resnet50_reference_step_sizes();
  int n32 = 0, n64 = 0, n128 = 0;
  for (const auto& [id, s] : steps) {
    n32 += s == 32;
    n64 += s == 64;
    n128 += s == 128;
  }
  CHECK(n32 == 23);
  CHECK(n64 == 20);
  CHECK(n128 == 10);
}

TEST_CASE("validate_spec reports violations") {
  auto s = chain_spec({8, 8, 8});
  s.couplings.push_back({{0, 1}});
  CHECK(validate_spec(s).empty());

  auto mismatched = chain_spec({8, 6, 8});
  mismatched.layers[2].in_channels = 6;
  mismatched.couplings.push_back({{0, 1}});
  CHECK_FALSE(validate_spec(mismatched).empty());

  auto cyclic = chain_spec({4, 4});
  cyclic.layers[0].predecessor_ids = {1};
  CHECK_FALSE(validate_spec(cyclic).empty());
}

TEST_CASE("join rules resolve in-channels") {
  NetworkSpec s;
  s.input_channels = 3;
  s.layers.push_back(conv(0, 3, 4, 1, 2, {}));
  s.layers.push_back(conv(1, 4, 6, 1, 2, {0}));
  auto cat = conv(2, 10, 5, 1, 2, {0, 1});
  cat.join = JoinRule::kConcat;
  s.layers.push_back(cat);
  CHECK(validate_spec(s).empty());
  auto a = dense_assignment(s);
  CHECK(resolve_in_channels(s, a, s.layer(2)) == 10);
  a.kept[1] = 2;
  CHECK(resolve_in_channels(s, a, s.layer(2)) == 6);
  a.kept[0] = 3;
  CHECK(resolve_in_channels(s, a, s.layer(1)) == 3);
  CHECK(resolve_in_channels(s, a, s.layer(0)) == 3);
}

TEST_CASE("spec JSON round trip and unknown-key rejection") {
  const auto spec = builtin_resnet50();
  const auto j = spec_to_json(spec);
  const auto back = spec_from_json(j);
  CHECK(spec_to_json(back) == j);

  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(spec_from_json(bad), ValidationError);
  auto bad_layer = j;
  bad_layer["layers"][0]["stride"] = 2;
  CHECK_THROWS_AS(spec_from_json(bad_layer), ValidationError);
}

TEST_CASE("assignment validation") {
  auto s = chain_spec({8, 8});
  s.couplings.push_back({{0, 1}});
  auto a = dense_assignment(s);
  CHECK(validate_assignment(s, a).empty());
  a.kept[0] = 5;
  CHECK_FALSE(validate_assignment(s, a).empty());
  a.kept[1] = 5;
  CHECK(validate_assignment(s, a).empty());
  a.kept[1] = 9;
  a.kept[0] = 9;
  CHECK_FALSE(validate_assignment(s, a).empty());
}
