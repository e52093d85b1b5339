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

#include "latprune/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "io_util.hpp"
#include "latprune/error.hpp"

namespace latprune {

double neuron_importance(double gamma, double beta, double grad_gamma,
                         double grad_beta) {
  if (!std::isfinite(gamma) || !std::isfinite(beta) ||
      !std::isfinite(grad_gamma) || !std::isfinite(grad_beta)) {
    throw ValidationError("non-finite batch-norm statistic");
  }
  return std::fabs(grad_gamma * gamma + grad_beta * beta);
}

ImportanceScores snapshot_importance(const BNSnapshot& snap) {
  ImportanceScores out;
  for (const auto& [id, s] : snap.layers) {
    auto& v = out[id];
    v.reserve(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
      v.push_back(neuron_importance(s.gamma[n], s.beta[n], s.grad_gamma[n],
                                    s.grad_beta[n]));
    }
  }
  return out;
}

ImportanceScores accumulate(std::span<const BNSnapshot> window) {
  if (window.empty()) throw ValidationError("cannot average an empty window");
  ImportanceScores sum = snapshot_importance(window.front());
  for (std::size_t k = 1; k < window.size(); ++k) {
    const auto scores = snapshot_importance(window[k]);
    if (scores.size() != sum.size()) {
      throw ValidationError("snapshot layer sets differ within the window");
    }
    for (const auto& [id, v] : scores) {
      auto it = sum.find(id);
      if (it == sum.end() || it->second.size() != v.size()) {
        throw ValidationError("snapshot shape mismatch on layer " + std::to_string(id));
      }
      for (std::size_t n = 0; n < v.size(); ++n) it->second[n] += v[n];
    }
  }
  const double inv = 1.0 / static_cast<double>(window.size());
  for (auto& [_, v] : sum) {
    for (double& x : v) x *= inv;
  }
  return sum;
}

LayerRanking rank_layer(std::span<const double> scores, std::span<const int> channels) {
  if (scores.empty()) throw ValidationError("cannot rank an empty layer");
  if (!channels.empty() && channels.size() != scores.size()) {
    throw ValidationError("channel labels do not match scores");
  }
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) {
      throw ValidationError("importance scores must be finite and non-negative");
    }
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto label = [&](std::size_t i) {
    return channels.empty() ? static_cast<int>(i) : channels[i];
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return label(a) < label(b);
  });
  LayerRanking r;
  double running = 0.0;
  for (std::size_t i : idx) {
    r.order.push_back(label(i));
    r.importance.push_back(scores[i]);
    running += scores[i];
    r.prefix_importance.push_back(running);
  }
  return r;
}

BNSnapshot snapshot_from_json(const nlohmann::json& j) {
  using detail::get_field;
  const std::string what = "trace line";
  detail::reject_unknown_keys(j, {"step", "layers"}, what);
  BNSnapshot snap;
  snap.step = get_field<int>(j, "step", what);
  if (!j.contains("layers") || !j.at("layers").is_object()) {
    throw ValidationError(what + ": 'layers' must be an object");
  }
  for (const auto& [key, jl] : j.at("layers").items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError(what + ": layer key '" + key + "' is not an integer");
    }
    const std::string lw = "trace layer " + key;
    detail::reject_unknown_keys(jl, {"gamma", "beta", "grad_gamma", "grad_beta"}, lw);
    BNLayerStats s;
    s.gamma = get_field<std::vector<double>>(jl, "gamma", lw);
    s.beta = get_field<std::vector<double>>(jl, "beta", lw);
    s.grad_gamma = get_field<std::vector<double>>(jl, "grad_gamma", lw);
    s.grad_beta = get_field<std::vector<double>>(jl, "grad_beta", lw);
    const std::size_t n = s.gamma.size();
    if (s.beta.size() != n || s.grad_gamma.size() != n || s.grad_beta.size() != n) {
      throw ValidationError(lw + ": arrays differ in length");
    }
    snap.layers.emplace(id, std::move(s));
  }
  return snap;
}

nlohmann::json snapshot_to_json(const BNSnapshot& snap) {
  nlohmann::json layers = nlohmann::json::object();
  for (const auto& [id, s] : snap.layers) {
    layers[std::to_string(id)] = {{"gamma", s.gamma},
                                  {"beta", s.beta},
                                  {"grad_gamma", s.grad_gamma},
                                  {"grad_beta", s.grad_beta}};
  }
  return {{"step", snap.step}, {"layers", layers}};
}

std::vector<BNSnapshot> parse_trace(const std::string& text) {
  std::vector<BNSnapshot> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(snapshot_from_json(
        detail::parse_json(line, "trace line " + std::to_string(line_no))));
  }
  return out;
}

std::vector<BNSnapshot> read_trace(const std::string& path) {
  return parse_trace(detail::read_text_file(path));
}

std::string format_trace(std::span<const BNSnapshot> snaps) {
  std::string out;
  for (const auto& s : snaps) {
    out += snapshot_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void write_trace(const std::string& path, std::span<const BNSnapshot> snaps) {
  detail::write_text_file(path, format_trace(snaps));
}

ImportanceScores scores_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scores file must be a JSON object");
  ImportanceScores out;
  for (const auto& [key, v] : j.items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError("scores: layer key '" + key + "' is not an integer");
    }
    try {
      out[id] = v.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("scores: layer " + key + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json scores_to_json(const ImportanceScores& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, v] : scores) j[std::to_string(id)] = v;
  return j;
}

}  // namespace latprune
