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

#ifndef LATPRUNE_NETMODEL_HPP_
#define LATPRUNE_NETMODEL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace latprune {

enum class LayerKind { kConv, kGroupConv, kLinear };

// How a layer with several predecessors sees its input. Residual sums keep
// the (coupled) width; concatenation adds widths.
enum class JoinRule { kAdd, kConcat };

struct Spatial {
  int height = 1;
  int width = 1;
};

struct LayerSpec {
  int id = 0;
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int kernel_size = 1;
  int in_channels = 1;
  int out_channels = 1;
  Spatial out_spatial;
  std::vector<int> predecessor_ids;
  bool prunable = true;
  int min_keep = 0;
  JoinRule join = JoinRule::kAdd;
};

struct CouplingSpec {
  std::vector<int> layer_ids;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  std::vector<CouplingSpec> couplings;
  int input_channels = 3;

  // Position of `layer_id` in `layers`, if present.
  std::optional<std::size_t> position(int layer_id) const;
  // Throws ValidationError for unknown ids.
  const LayerSpec& layer(int layer_id) const;
};

// Kept output-channel count p_l per layer. Layers absent from `kept` are
// treated as dense. `channels` optionally records the surviving indices.
struct ChannelAssignment {
  std::map<int, int> kept;
  std::map<int, std::vector<int>> channels;

  int count(const LayerSpec& layer) const;
};

std::int64_t total_neurons(const NetworkSpec& spec);

ChannelAssignment dense_assignment(const NetworkSpec& spec);

// Effective input width of `layer` under `assign`: input_channels for
// source layers, otherwise the join of its predecessors' kept counts.
int resolve_in_channels(const NetworkSpec& spec, const ChannelAssignment& assign,
                        const LayerSpec& layer);

// Multiply-accumulates of one layer at (p_in, p_out).
std::int64_t layer_macs(const LayerSpec& layer, int p_in, int p_out);

std::int64_t network_flops(const NetworkSpec& spec,
                           const ChannelAssignment& assign);

// All invariant violations; empty means valid.
std::vector<std::string> validate_spec(const NetworkSpec& spec);
std::vector<std::string> validate_assignment(const NetworkSpec& spec,
                                             const ChannelAssignment& assign);

// Layers in an order where every predecessor comes first. Assumes the
// spec is acyclic (checked by validate_spec).
std::vector<int> topological_order(const NetworkSpec& spec);
std::vector<int> successors(const NetworkSpec& spec, int layer_id);

// Map from layer id to the index of its coupling set in spec.couplings.
std::map<int, std::size_t> coupling_index(const NetworkSpec& spec);

// Bottleneck ResNet50 at 224x224: 53 conv layers (16 blocks plus 4
// downsample shortcuts), residual outputs of each stage coupled, stem
// conv unprunable.
NetworkSpec builtin_resnet50();

// Reference latency step sizes for builtin_resnet50(), keyed by layer id:
// 23 layers at 32 channels, 20 at 64 and 10 at 128.
std::map<int, int> resnet50_reference_step_sizes();

NetworkSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const NetworkSpec& spec);
// Accepts a JSON file path or "builtin:resnet50".
NetworkSpec load_spec(const std::string& path);

}  // namespace latprune

#endif  // LATPRUNE_NETMODEL_HPP_
