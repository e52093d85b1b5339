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

#ifndef LATPRUNE_IMPORTANCE_HPP_
#define LATPRUNE_IMPORTANCE_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace latprune {

// Batch-norm scale/shift and their gradients for every channel of a layer.
struct BNLayerStats {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;

  std::size_t size() const { return gamma.size(); }
};

struct BNSnapshot {
  int step = 0;
  std::map<int, BNLayerStats> layers;
};

// Per-layer, per-channel scores keyed by layer id.
using ImportanceScores = std::map<int, std::vector<double>>;

// |grad_gamma * gamma + grad_beta * beta|
double neuron_importance(double gamma, double beta, double grad_gamma,
                         double grad_beta);

ImportanceScores snapshot_importance(const BNSnapshot& snap);

// Mean over the window of per-snapshot importances (mean of absolute values).
ImportanceScores accumulate(std::span<const BNSnapshot> window);

struct LayerRanking {
  std::vector<int> order;                 // channel indices, most important first
  std::vector<double> importance;         // score along `order`
  std::vector<double> prefix_importance;  // [p - 1] = sum of the top p scores
};

// Stable descending sort; equal scores keep the lower channel index first.
// `channels` labels each score (defaults to 0..n-1).
LayerRanking rank_layer(std::span<const double> scores,
                        std::span<const int> channels = {});

BNSnapshot snapshot_from_json(const nlohmann::json& j);
nlohmann::json snapshot_to_json(const BNSnapshot& snap);

// JSON-lines trace, one snapshot per line.
std::vector<BNSnapshot> parse_trace(const std::string& text);
std::vector<BNSnapshot> read_trace(const std::string& path);
std::string format_trace(std::span<const BNSnapshot> snaps);
void write_trace(const std::string& path, std::span<const BNSnapshot> snaps);

// Scores file: {"<layer_id>": [score, ...], ...}
ImportanceScores scores_from_json(const nlohmann::json& j);
nlohmann::json scores_to_json(const ImportanceScores& scores);

}  // namespace latprune

#endif  // LATPRUNE_IMPORTANCE_HPP_
