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

#include "latprune/latency.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>

#include "io_util.hpp"
#include "latprune/error.hpp"
#include "latprune/knapsack.hpp"

namespace latprune {

namespace {

int min_gap(const std::vector<int>& pts) {
  int g = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const int d = pts[i] - pts[i - 1];
    g = g == 0 ? d : std::min(g, d);
  }
  return g == 0 ? 1 : g;
}

// Index of the smallest sample point >= v, or npos.
std::size_t ceil_index(const std::vector<int>& pts, int v) {
  auto it = std::lower_bound(pts.begin(), pts.end(), v);
  return it == pts.end() ? std::string::npos
                         : static_cast<std::size_t>(it - pts.begin());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based noise in [-amplitude, amplitude]; independent of iteration
// order so the parallel and serial generators agree bit for bit.
double entry_noise(const StaircaseParams& p, int layer_id, int c_in, int c_out) {
  if (p.noise_amplitude_ms == 0.0) return 0.0;
  std::uint64_t h = splitmix64(p.noise_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(layer_id)));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(c_in) << 32 |
                      static_cast<std::uint32_t>(c_out)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return (2.0 * u - 1.0) * p.noise_amplitude_ms;
}

inline double staircase_entry(const StaircaseParams& p, int layer_id, int c_in,
                              int c_out) {
  if (c_out == 0) return 0.0;
  return std::max(0.0, staircase_value(p, c_in, c_out) +
                           entry_noise(p, layer_id, c_in, c_out));
}

LayerLatencyGrid empty_grid(const LayerSpec& l) {
  LayerLatencyGrid g;
  g.in_points.resize(static_cast<std::size_t>(l.in_channels) + 1);
  g.out_points.resize(static_cast<std::size_t>(l.out_channels) + 1);
  for (std::size_t i = 0; i < g.in_points.size(); ++i) g.in_points[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < g.out_points.size(); ++j) g.out_points[j] = static_cast<int>(j);
  g.values_ms.assign(g.in_points.size() * g.out_points.size(), 0.0);
  return g;
}

const StaircaseParams& params_for(const std::map<int, StaircaseParams>& params,
                                  const StaircaseParams& fallback, int id) {
  auto it = params.find(id);
  return it == params.end() ? fallback : it->second;
}

void check_params(const StaircaseParams& p) {
  if (p.step_in < 1 || p.step_out < 1) {
    throw ValidationError("staircase step sizes must be >= 1");
  }
  if (p.base_ms < 0.0 || p.slope_ms <= 0.0 || p.noise_amplitude_ms < 0.0) {
    throw ValidationError("staircase needs base >= 0, slope > 0, noise >= 0");
  }
}

}  // namespace

int LayerLatencyGrid::in_granularity() const { return min_gap(in_points); }
int LayerLatencyGrid::out_granularity() const { return min_gap(out_points); }

void LatencyTable::set_layer(int layer_id, LayerLatencyGrid grid) {
  if (grid.in_points.empty() || grid.out_points.empty() ||
      grid.values_ms.size() != grid.in_points.size() * grid.out_points.size()) {
    throw ValidationError("malformed latency grid for layer " +
                          std::to_string(layer_id));
  }
  grids_[layer_id] = std::move(grid);
}

const LayerLatencyGrid& LatencyTable::grid(int layer_id) const {
  auto it = grids_.find(layer_id);
  if (it == grids_.end()) {
    throw ValidationError("latency table has no layer " + std::to_string(layer_id));
  }
  return it->second;
}

double lut_query(const LatencyTable& table, int layer_id, int p_in, int p_out) {
  const auto& g = table.grid(layer_id);
  if (p_in < 0 || p_out < 0) throw ValidationError("negative channel count in query");
  if (p_out == 0) return 0.0;
  const std::size_t i = ceil_index(g.in_points, p_in);
  const std::size_t j = ceil_index(g.out_points, p_out);
  if (i == std::string::npos || j == std::string::npos) {
    throw ValidationError("query (" + std::to_string(p_in) + ", " +
                          std::to_string(p_out) + ") above latency grid of layer " +
                          std::to_string(layer_id));
  }
  return g.at(i, j);
}

double neuron_contribution(const LatencyTable& table, int layer_id, int p_in,
                           int j) {
  const auto& g = table.grid(layer_id);
  if (j < 1 || j > g.max_out()) {
    throw ValidationError("neuron rank " + std::to_string(j) + " out of range");
  }
  return lut_query(table, layer_id, p_in, j) - lut_query(table, layer_id, p_in, j - 1);
}

std::int64_t scaled_neuron_contribution(const LatencyTable& table, int layer_id,
                                        int p_in, int j) {
  const auto& g = table.grid(layer_id);
  if (j < 1 || j > g.max_out()) {
    throw ValidationError("neuron rank " + std::to_string(j) + " out of range");
  }
  return to_int_cost(lut_query(table, layer_id, p_in, j)) -
         to_int_cost(lut_query(table, layer_id, p_in, j - 1));
}

int detect_step_size(const LatencyTable& table, int layer_id, int p_in,
                     int fallback, double jump_tolerance_ms) {
  const auto& g = table.grid(layer_id);
  std::size_t i = ceil_index(g.in_points, std::max(p_in, 0));
  if (i == std::string::npos) i = g.in_points.size() - 1;

  std::vector<int> jumps;
  double prev = 0.0;  // T(., 0)
  for (std::size_t j = 0; j < g.out_points.size(); ++j) {
    if (g.out_points[j] == 0) continue;
    const double v = g.at(i, j);
    if (v - prev > jump_tolerance_ms) jumps.push_back(g.out_points[j]);
    prev = v;
  }
  if (jumps.size() < 2) return fallback;
  std::map<int, int> freq;
  for (std::size_t k = 1; k < jumps.size(); ++k) ++freq[jumps[k] - jumps[k - 1]];
  int best = 0, best_count = 0;
  for (const auto& [gap, count] : freq) {  // ascending gap: ties keep smaller
    if (count > best_count) {
      best = gap;
      best_count = count;
    }
  }
  return best;
}

double staircase_value(const StaircaseParams& p, int c_in, int c_out) {
  if (c_out <= 0) return 0.0;
  const auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
  return p.base_ms + p.slope_ms * ceil_div(c_in, p.step_in) *
                         static_cast<double>(ceil_div(c_out, p.step_out));
}

LatencyTable gen_staircase_lut(const NetworkSpec& spec,
                               const std::map<int, StaircaseParams>& params,
                               const StaircaseParams& fallback) {
  LatencyTable table;
  for (const auto& l : spec.layers) {
    const auto& p = params_for(params, fallback, l.id);
    check_params(p);
    LayerLatencyGrid g = empty_grid(l);
    const auto rows = static_cast<std::int64_t>(g.in_points.size());
    const auto cols = g.out_points.size();
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
      double* row = g.values_ms.data() + static_cast<std::size_t>(r) * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        row[c] = staircase_entry(p, l.id, static_cast<int>(r), static_cast<int>(c));
      }
    }
    table.set_layer(l.id, std::move(g));
  }
  return table;
}

LatencyTable gen_staircase_lut_serial(const NetworkSpec& spec,
                                      const std::map<int, StaircaseParams>& params,
                                      const StaircaseParams& fallback) {
  LatencyTable table;
  for (const auto& l : spec.layers) {
    const auto& p = params_for(params, fallback, l.id);
    check_params(p);
    LayerLatencyGrid g = empty_grid(l);
    for (std::size_t r = 0; r < g.in_points.size(); ++r) {
      for (std::size_t c = 0; c < g.out_points.size(); ++c) {
        g.values_ms[r * g.out_points.size() + c] =
            staircase_entry(p, l.id, static_cast<int>(r), static_cast<int>(c));
      }
    }
    table.set_layer(l.id, std::move(g));
  }
  return table;
}

double network_latency(const NetworkSpec& spec, const ChannelAssignment& assign,
                       const LatencyTable& table) {
  double total = 0.0;
  for (const auto& l : spec.layers) {
    total += lut_query(table, l.id, resolve_in_channels(spec, assign, l),
                       assign.count(l));
  }
  return total;
}

namespace {

StaircaseParams params_from_object(const nlohmann::json& j, const std::string& what) {
  using detail::get_field_or;
  detail::reject_unknown_keys(j,
                              {"base_ms", "slope_ms", "step_in", "step_out",
                               "noise_amplitude_ms", "noise_seed"},
                              what);
  StaircaseParams p;
  p.base_ms = get_field_or<double>(j, "base_ms", p.base_ms, what);
  p.slope_ms = get_field_or<double>(j, "slope_ms", p.slope_ms, what);
  p.step_in = get_field_or<int>(j, "step_in", p.step_in, what);
  p.step_out = get_field_or<int>(j, "step_out", p.step_out, what);
  p.noise_amplitude_ms =
      get_field_or<double>(j, "noise_amplitude_ms", p.noise_amplitude_ms, what);
  p.noise_seed = get_field_or<std::uint64_t>(j, "noise_seed", p.noise_seed, what);
  check_params(p);
  return p;
}

}  // namespace

StaircaseParamSet staircase_params_from_json(const nlohmann::json& j) {
  const std::string what = "staircase params";
  StaircaseParamSet set;
  if (!j.is_object()) throw ValidationError(what + ": expected an object");
  if (!j.contains("default") && !j.contains("layers")) {
    set.fallback = params_from_object(j, what);
    return set;
  }
  detail::reject_unknown_keys(j, {"default", "layers"}, what);
  if (j.contains("default")) set.fallback = params_from_object(j.at("default"), what);
  if (j.contains("layers")) {
    for (const auto& [key, jl] : j.at("layers").items()) {
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ValidationError(what + ": layer key '" + key + "' is not an integer");
      }
      set.layers[id] = params_from_object(jl, what + " layer " + key);
    }
  }
  return set;
}

StaircaseParamSet load_staircase_params(const std::string& path) {
  if (path == "builtin:resnet50") {
    StaircaseParamSet set;
    set.fallback = {0.002, 0.0005, 32, 32, 0.0, 0};
    for (const auto& [id, step] : resnet50_reference_step_sizes()) {
      StaircaseParams p = set.fallback;
      p.step_out = step;
      set.layers[id] = p;
    }
    return set;
  }
  return staircase_params_from_json(
      detail::parse_json(detail::read_text_file(path), "staircase params " + path));
}

LatencyTable gen_staircase_lut(const NetworkSpec& spec, const StaircaseParamSet& params) {
  return gen_staircase_lut(spec, params.layers, params.fallback);
}

namespace {

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError("LUT line " + std::to_string(line_no) + ": bad number '" +
                          std::string(field) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

LatencyTable parse_lut_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "layer_id,in_channels,out_channels,latency_ms") {
    throw ValidationError("LUT header must be layer_id,in_channels,out_channels,latency_ms");
  }
  std::map<int, std::map<std::pair<int, int>, double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= sv.size(); ++k) {
      if (k == sv.size() || sv[k] == ',') {
        f.push_back(trim(sv.substr(start, k - start)));
        start = k + 1;
      }
    }
    if (f.size() != 4) {
      throw ValidationError("LUT line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const int layer = parse_number<int>(f[0], line_no);
    const int cin = parse_number<int>(f[1], line_no);
    const int cout = parse_number<int>(f[2], line_no);
    const double ms = parse_number<double>(f[3], line_no);
    if (cin < 0 || cout < 0 || !std::isfinite(ms) || ms < 0.0) {
      throw ValidationError("LUT line " + std::to_string(line_no) +
                            ": counts and latency must be non-negative");
    }
    if (cout == 0 && ms != 0.0) {
      throw ValidationError("LUT line " + std::to_string(line_no) +
                            ": latency at zero out-channels must be 0");
    }
    if (!rows[layer].emplace(std::make_pair(cin, cout), ms).second) {
      throw ValidationError("LUT line " + std::to_string(line_no) +
                            ": duplicate (layer, in, out) key");
    }
  }
  LatencyTable table;
  for (const auto& [layer, cells] : rows) {
    std::set<int> ins, outs;
    for (const auto& [key, _] : cells) {
      ins.insert(key.first);
      outs.insert(key.second);
    }
    if (cells.size() != ins.size() * outs.size()) {
      throw ValidationError("LUT layer " + std::to_string(layer) +
                            " is not a complete grid");
    }
    LayerLatencyGrid g;
    g.in_points.assign(ins.begin(), ins.end());
    g.out_points.assign(outs.begin(), outs.end());
    for (const auto& [key, ms] : cells) g.values_ms.push_back(ms);  // row-major
    table.set_layer(layer, std::move(g));
  }
  return table;
}

LatencyTable read_lut_csv(const std::string& path) {
  return parse_lut_csv(detail::read_text_file(path));
}

std::string format_lut_csv(const LatencyTable& table) {
  std::string out = "layer_id,in_channels,out_channels,latency_ms\n";
  char buf[64];
  for (const auto& [layer, g] : table.grids()) {
    for (std::size_t i = 0; i < g.in_points.size(); ++i) {
      for (std::size_t j = 0; j < g.out_points.size(); ++j) {
        out += std::to_string(layer);
        out += ',';
        out += std::to_string(g.in_points[i]);
        out += ',';
        out += std::to_string(g.out_points[j]);
        out += ',';
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), g.at(i, j));
        out.append(buf, ptr);
        out += '\n';
      }
    }
  }
  return out;
}

void write_lut_csv(const std::string& path, const LatencyTable& table) {
  detail::write_text_file(path, format_lut_csv(table));
}

}  // namespace latprune
