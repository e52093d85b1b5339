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

#ifndef LATPRUNE_LATENCY_HPP_
#define LATPRUNE_LATENCY_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "latprune/netmodel.hpp"

namespace latprune {

// Latency grid of one layer over (in-channels, out-channels) sample points,
// row-major by in-channel. Sample points are strictly increasing.
struct LayerLatencyGrid {
  std::vector<int> in_points;
  std::vector<int> out_points;
  std::vector<double> values_ms;

  double at(std::size_t in_idx, std::size_t out_idx) const {
    return values_ms[in_idx * out_points.size() + out_idx];
  }
  int max_in() const { return in_points.back(); }
  int max_out() const { return out_points.back(); }
  // Smallest gap between consecutive sample points, 1 for a single point.
  int in_granularity() const;
  int out_granularity() const;
};

class LatencyTable {
 public:
  void set_layer(int layer_id, LayerLatencyGrid grid);
  bool has_layer(int layer_id) const { return grids_.count(layer_id) != 0; }
  const LayerLatencyGrid& grid(int layer_id) const;
  const std::map<int, LayerLatencyGrid>& grids() const { return grids_; }

 private:
  std::map<int, LayerLatencyGrid> grids_;
};

struct StaircaseParams {
  double base_ms = 0.0;
  double slope_ms = 0.01;
  int step_in = 32;
  int step_out = 32;
  double noise_amplitude_ms = 0.0;
  std::uint64_t noise_seed = 0;
};

inline constexpr int kDefaultStepFallback = 32;

// Latency at (p_in, p_out). Exact at grid points, otherwise the value at
// the smallest dominating grid point. p_out == 0 costs nothing.
double lut_query(const LatencyTable& table, int layer_id, int p_in, int p_out);

// T(p_in, j) - T(p_in, j - 1) for 1 <= j <= max out-channels.
double neuron_contribution(const LatencyTable& table, int layer_id, int p_in,
                           int j);
// Same delta on scaled integers: to_int_cost(T(j)) - to_int_cost(T(j - 1)).
// These telescope exactly to to_int_cost(T(p)).
std::int64_t scaled_neuron_contribution(const LatencyTable& table, int layer_id,
                                        int p_in, int j);

// Modal out-channel gap between latency jumps at fixed p_in. A jump is an
// increase larger than `jump_tolerance_ms`.
int detect_step_size(const LatencyTable& table, int layer_id, int p_in,
                     int fallback = kDefaultStepFallback,
                     double jump_tolerance_ms = 1e-9);

// Closed-form staircase value, without noise.
double staircase_value(const StaircaseParams& p, int c_in, int c_out);

// Granularity-1 grid over [0, C_in] x [0, N] for every layer. Layers
// missing from `params` use `fallback`.
LatencyTable gen_staircase_lut(const NetworkSpec& spec,
                               const std::map<int, StaircaseParams>& params,
                               const StaircaseParams& fallback = {});
// Single-threaded reference; produces bit-identical tables.
LatencyTable gen_staircase_lut_serial(const NetworkSpec& spec,
                                      const std::map<int, StaircaseParams>& params,
                                      const StaircaseParams& fallback = {});

double network_latency(const NetworkSpec& spec, const ChannelAssignment& assign,
                       const LatencyTable& table);

// Staircase parameters for every layer: `layers` overrides `fallback`.
struct StaircaseParamSet {
  StaircaseParams fallback;
  std::map<int, StaircaseParams> layers;
};

// Either a single parameter object applied to every layer, or
// {"default": {...}, "layers": {"<layer_id>": {...}}}.
StaircaseParamSet staircase_params_from_json(const nlohmann::json& j);
// JSON file, or "builtin:resnet50" for the reference ResNet50 step sizes.
StaircaseParamSet load_staircase_params(const std::string& path);
LatencyTable gen_staircase_lut(const NetworkSpec& spec, const StaircaseParamSet& params);

// CSV with header layer_id,in_channels,out_channels,latency_ms.
LatencyTable read_lut_csv(const std::string& path);
LatencyTable parse_lut_csv(const std::string& text);
std::string format_lut_csv(const LatencyTable& table);
void write_lut_csv(const std::string& path, const LatencyTable& table);

}  // namespace latprune

#endif  // LATPRUNE_LATENCY_HPP_
