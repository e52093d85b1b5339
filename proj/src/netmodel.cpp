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

#include "latprune/netmodel.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "io_util.hpp"
#include "latprune/error.hpp"

namespace latprune {

std::optional<std::size_t> NetworkSpec::position(int layer_id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == layer_id) return i;
  }
  return std::nullopt;
}

const LayerSpec& NetworkSpec::layer(int layer_id) const {
  auto pos = position(layer_id);
  if (!pos) throw ValidationError("unknown layer id " + std::to_string(layer_id));
  return layers[*pos];
}

int ChannelAssignment::count(const LayerSpec& layer) const {
  auto it = kept.find(layer.id);
  return it == kept.end() ? layer.out_channels : it->second;
}

std::int64_t total_neurons(const NetworkSpec& spec) {
  std::int64_t total = 0;
  for (const auto& l : spec.layers) total += l.out_channels;
  return total;
}

ChannelAssignment dense_assignment(const NetworkSpec& spec) {
  ChannelAssignment a;
  for (const auto& l : spec.layers) a.kept[l.id] = l.out_channels;
  return a;
}

int resolve_in_channels(const NetworkSpec& spec, const ChannelAssignment& assign,
                        const LayerSpec& layer) {
  if (layer.predecessor_ids.empty()) return spec.input_channels;
  int joined = 0;
  for (int pid : layer.predecessor_ids) {
    int c = assign.count(spec.layer(pid));
    joined = layer.join == JoinRule::kConcat ? joined + c : std::max(joined, c);
  }
  return joined;
}

std::int64_t layer_macs(const LayerSpec& layer, int p_in, int p_out) {
  if (p_in <= 0 || p_out <= 0) return 0;
  const std::int64_t spatial =
      static_cast<std::int64_t>(layer.out_spatial.height) * layer.out_spatial.width;
  const std::int64_t k2 =
      static_cast<std::int64_t>(layer.kernel_size) * layer.kernel_size;
  // Depthwise: groups == p_in, so each output channel sees one input channel.
  const std::int64_t fan_in = layer.kind == LayerKind::kGroupConv ? 1 : p_in;
  return fan_in * p_out * k2 * spatial;
}

std::int64_t network_flops(const NetworkSpec& spec,
                           const ChannelAssignment& assign) {
  for (const auto& [id, _] : assign.kept) {
    if (!spec.position(id)) {
      throw ValidationError("assignment references unknown layer " +
                            std::to_string(id));
    }
  }
  std::int64_t macs = 0;
  for (const auto& l : spec.layers) {
    macs += layer_macs(l, resolve_in_channels(spec, assign, l), assign.count(l));
  }
  return macs;
}

std::vector<int> successors(const NetworkSpec& spec, int layer_id) {
  std::vector<int> out;
  for (const auto& l : spec.layers) {
    if (std::find(l.predecessor_ids.begin(), l.predecessor_ids.end(),
                  layer_id) != l.predecessor_ids.end()) {
      out.push_back(l.id);
    }
  }
  return out;
}

std::map<int, std::size_t> coupling_index(const NetworkSpec& spec) {
  std::map<int, std::size_t> idx;
  for (std::size_t c = 0; c < spec.couplings.size(); ++c) {
    for (int id : spec.couplings[c].layer_ids) idx.emplace(id, c);
  }
  return idx;
}

namespace {

// Kahn's algorithm over known ids; returns fewer ids than layers on a cycle.
std::vector<int> kahn_order(const NetworkSpec& spec) {
  std::map<int, int> indegree;
  for (const auto& l : spec.layers) indegree[l.id] = 0;
  for (const auto& l : spec.layers) {
    for (int p : l.predecessor_ids) {
      if (indegree.count(p)) ++indegree[l.id];
    }
  }
  std::vector<int> ready;
  for (const auto& l : spec.layers) {
    if (indegree[l.id] == 0) ready.push_back(l.id);
  }
  std::vector<int> order;
  std::size_t head = 0;
  while (head < ready.size()) {
    int id = ready[head++];
    order.push_back(id);
    for (int s : successors(spec, id)) {
      if (--indegree[s] == 0) ready.push_back(s);
    }
  }
  return order;
}

}  // namespace

std::vector<int> topological_order(const NetworkSpec& spec) {
  return kahn_order(spec);
}

std::vector<std::string> validate_spec(const NetworkSpec& spec) {
  std::vector<std::string> v;
  if (spec.input_channels <= 0) v.push_back("input_channels must be positive");

  std::set<int> ids;
  for (const auto& l : spec.layers) {
    const std::string tag = "layer " + std::to_string(l.id) + " (" + l.name + ")";
    if (!ids.insert(l.id).second) v.push_back(tag + ": duplicate layer_id");
    if (l.kernel_size <= 0) v.push_back(tag + ": kernel_size must be positive");
    if (l.in_channels <= 0) v.push_back(tag + ": in_channels must be positive");
    if (l.out_channels <= 0) v.push_back(tag + ": out_channels must be positive");
    if (l.out_spatial.height <= 0 || l.out_spatial.width <= 0) {
      v.push_back(tag + ": out_spatial must be positive");
    }
    if (l.min_keep < 0 || l.min_keep > l.out_channels) {
      v.push_back(tag + ": min_keep must lie in [0, out_channels]");
    }
    if (l.kind == LayerKind::kGroupConv && l.in_channels != l.out_channels) {
      v.push_back(tag + ": group_conv requires in_channels == out_channels");
    }
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::string tag = "layer " + std::to_string(l.id);
    if (i > 0 && l.predecessor_ids.empty()) {
      v.push_back(tag + ": non-first layer has no predecessor");
    }
    bool known_preds = true;
    for (int p : l.predecessor_ids) {
      if (!ids.count(p)) {
        v.push_back(tag + ": unknown predecessor " + std::to_string(p));
        known_preds = false;
      }
    }
    if (known_preds) {
      int expect = resolve_in_channels(spec, ChannelAssignment{}, l);
      if (expect != l.in_channels) {
        v.push_back(tag + ": in_channels " + std::to_string(l.in_channels) +
                    " disagrees with joined predecessor width " +
                    std::to_string(expect));
      }
    }
  }
  if (kahn_order(spec).size() != spec.layers.size()) {
    v.push_back("predecessor graph contains a cycle");
  }

  std::set<int> coupled;
  for (std::size_t c = 0; c < spec.couplings.size(); ++c) {
    const auto& cs = spec.couplings[c];
    const std::string tag = "coupling " + std::to_string(c);
    if (cs.layer_ids.empty()) v.push_back(tag + ": empty");
    std::optional<int> width;
    for (int id : cs.layer_ids) {
      if (!coupled.insert(id).second) {
        v.push_back(tag + ": layer " + std::to_string(id) +
                    " appears in more than one coupling");
      }
      auto pos = spec.position(id);
      if (!pos) {
        v.push_back(tag + ": unknown layer " + std::to_string(id));
        continue;
      }
      int w = spec.layers[*pos].out_channels;
      if (width && *width != w) {
        v.push_back(tag + ": coupled layers have mismatched out_channels");
      }
      width = w;
    }
  }
  return v;
}

std::vector<std::string> validate_assignment(const NetworkSpec& spec,
                                             const ChannelAssignment& assign) {
  std::vector<std::string> v;
  for (const auto& [id, p] : assign.kept) {
    auto pos = spec.position(id);
    if (!pos) {
      v.push_back("assignment references unknown layer " + std::to_string(id));
      continue;
    }
    const auto& l = spec.layers[*pos];
    if (p < l.min_keep || p > l.out_channels) {
      v.push_back("layer " + std::to_string(id) + ": kept count " +
                  std::to_string(p) + " outside [min_keep, out_channels]");
    }
  }
  for (const auto& cs : spec.couplings) {
    std::optional<int> first;
    for (int id : cs.layer_ids) {
      auto pos = spec.position(id);
      if (!pos) continue;
      int p = assign.count(spec.layers[*pos]);
      if (first && *first != p) {
        v.push_back("coupled layers report unequal kept counts");
        break;
      }
      first = p;
    }
  }
  return v;
}

NetworkSpec builtin_resnet50() {
  NetworkSpec spec;
  spec.input_channels = 3;
  int next_id = 0;
  auto add = [&](std::string name, int k, int in, int out, int res,
                 std::vector<int> preds) {
    LayerSpec l;
    l.id = next_id++;
    l.name = std::move(name);
    l.kind = LayerKind::kConv;
    l.kernel_size = k;
    l.in_channels = in;
    l.out_channels = out;
    l.out_spatial = {res, res};
    l.predecessor_ids = std::move(preds);
    spec.layers.push_back(std::move(l));
    return spec.layers.back().id;
  };

  int stem = add("conv1", 7, 3, 64, 112, {});
  spec.layers.back().prunable = false;
  spec.layers.back().min_keep = 64;

  struct Stage {
    int mid, out, blocks, res;
  };
  constexpr Stage kStages[] = {
      {64, 256, 3, 56}, {128, 512, 4, 28}, {256, 1024, 6, 14}, {512, 2048, 3, 7}};

  // Sources of the current residual stream and their width.
  std::vector<int> stream = {stem};
  int stream_width = 64;
  int in_res = 56;  // after the stem max-pool
  for (int s = 0; s < 4; ++s) {
    const Stage& st = kStages[s];
    CouplingSpec coupling;
    for (int b = 0; b < st.blocks; ++b) {
      const std::string p = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
      // Stride sits on the 3x3 conv, so the first 1x1 runs at input res.
      int c1 = add(p + ".conv1", 1, stream_width, st.mid,
                   b == 0 ? in_res : st.res, stream);
      int c2 = add(p + ".conv2", 3, st.mid, st.mid, st.res, {c1});
      int c3 = add(p + ".conv3", 1, st.mid, st.out, st.res, {c2});
      coupling.layer_ids.push_back(c3);
      if (b == 0) {
        int ds = add(p + ".downsample", 1, stream_width, st.out, st.res, stream);
        coupling.layer_ids.push_back(ds);
        stream = {c3, ds};
      } else {
        stream = {c3};
      }
      stream_width = st.out;
    }
    spec.couplings.push_back(std::move(coupling));
    in_res = st.res;
  }
  return spec;
}

std::map<int, int> resnet50_reference_step_sizes() {
  // Per stage: {conv1, conv2, residual output (conv3 + downsample)}.
  constexpr int kStageSteps[4][3] = {
      {32, 32, 128}, {32, 32, 32}, {64, 64, 64}, {128, 128, 32}};
  std::map<int, int> steps;
  for (const auto& l : builtin_resnet50().layers) {
    if (l.name == "conv1") {
      steps[l.id] = 64;
      continue;
    }
    const int stage = l.name[5] - '1';
    int role = 2;
    if (l.name.ends_with(".conv1")) role = 0;
    else if (l.name.ends_with(".conv2")) role = 1;
    steps[l.id] = kStageSteps[stage][role];
  }
  return steps;
}

namespace {

LayerKind parse_kind(const std::string& s) {
  if (s == "conv") return LayerKind::kConv;
  if (s == "group_conv") return LayerKind::kGroupConv;
  if (s == "linear") return LayerKind::kLinear;
  throw ValidationError("unknown layer kind '" + s + "'");
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kGroupConv: return "group_conv";
    case LayerKind::kLinear: return "linear";
  }
  return "conv";
}

}  // namespace

NetworkSpec spec_from_json(const nlohmann::json& j) {
  using detail::get_field;
  using detail::get_field_or;
  const std::string what = "network spec";
  detail::reject_unknown_keys(j, {"layers", "couplings", "input_channels"}, what);
  NetworkSpec spec;
  spec.input_channels = get_field<int>(j, "input_channels", what);
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ValidationError(what + ": 'layers' must be an array");
  }
  for (const auto& jl : j.at("layers")) {
    const std::string lw = "layer entry";
    detail::reject_unknown_keys(
        jl,
        {"layer_id", "name", "kind", "kernel_size", "in_channels", "out_channels",
         "out_spatial", "predecessor_ids", "prunable", "min_keep", "join"},
        lw);
    LayerSpec l;
    l.id = get_field<int>(jl, "layer_id", lw);
    l.name = get_field_or<std::string>(jl, "name", "layer" + std::to_string(l.id), lw);
    l.kind = parse_kind(get_field_or<std::string>(jl, "kind", "conv", lw));
    l.in_channels = get_field<int>(jl, "in_channels", lw);
    l.out_channels = get_field<int>(jl, "out_channels", lw);
    if (l.kind == LayerKind::kLinear) {
      l.kernel_size = 1;
      l.out_spatial = {1, 1};
    } else {
      l.kernel_size = get_field<int>(jl, "kernel_size", lw);
      auto hw = get_field_or<std::vector<int>>(jl, "out_spatial", {1, 1}, lw);
      if (hw.size() != 2) throw ValidationError(lw + ": out_spatial needs [h, w]");
      l.out_spatial = {hw[0], hw[1]};
    }
    l.predecessor_ids = get_field_or<std::vector<int>>(jl, "predecessor_ids", {}, lw);
    l.prunable = get_field_or<bool>(jl, "prunable", true, lw);
    l.min_keep = get_field_or<int>(jl, "min_keep", l.prunable ? 0 : l.out_channels, lw);
    const auto join = get_field_or<std::string>(jl, "join", "add", lw);
    if (join == "add") l.join = JoinRule::kAdd;
    else if (join == "concat") l.join = JoinRule::kConcat;
    else throw ValidationError(lw + ": unknown join '" + join + "'");
    spec.layers.push_back(std::move(l));
  }
  for (auto ids : get_field_or<std::vector<std::vector<int>>>(j, "couplings", {}, what)) {
    spec.couplings.push_back({std::move(ids)});
  }
  return spec;
}

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    layers.push_back({{"layer_id", l.id},
                      {"name", l.name},
                      {"kind", kind_name(l.kind)},
                      {"kernel_size", l.kernel_size},
                      {"in_channels", l.in_channels},
                      {"out_channels", l.out_channels},
                      {"out_spatial", {l.out_spatial.height, l.out_spatial.width}},
                      {"predecessor_ids", l.predecessor_ids},
                      {"prunable", l.prunable},
                      {"min_keep", l.min_keep},
                      {"join", l.join == JoinRule::kAdd ? "add" : "concat"}});
  }
  nlohmann::json couplings = nlohmann::json::array();
  for (const auto& c : spec.couplings) couplings.push_back(c.layer_ids);
  return {{"layers", layers},
          {"couplings", couplings},
          {"input_channels", spec.input_channels}};
}

NetworkSpec load_spec(const std::string& path) {
  if (path == "builtin:resnet50") return builtin_resnet50();
  auto spec = spec_from_json(
      detail::parse_json(detail::read_text_file(path), "network spec " + path));
  auto violations = validate_spec(spec);
  if (!violations.empty()) {
    throw ValidationError("invalid network spec " + path + ": " + violations.front());
  }
  return spec;
}

}  // namespace latprune
