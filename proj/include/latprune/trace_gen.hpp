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

#ifndef LATPRUNE_TRACE_GEN_HPP_
#define LATPRUNE_TRACE_GEN_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"
#include "latprune/importance.hpp"
#include "latprune/netmodel.hpp"

namespace latprune {

// Dense per-channel network mirroring a NetworkSpec's graph: each layer
// computes h = relu(gamma * (W x) + beta) on the joined outputs of its
// predecessors; sink layers feed a linear readout scored with mean squared
// error against a fixed synthetic dataset.
struct ToyLayer {
  int layer_id = 0;
  int width = 0;
  int in_width = 0;
  JoinRule join = JoinRule::kAdd;
  std::vector<int> predecessor_ids;
  std::vector<double> weight;  // width x in_width, row-major
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> readout;  // empty unless the layer is a sink
};

struct ToyNet {
  int input_dim = 0;
  std::vector<ToyLayer> layers;  // topological order
  std::vector<double> inputs;    // samples x input_dim
  std::vector<double> targets;   // one per sample

  std::size_t samples() const { return targets.size(); }
  const ToyLayer& layer(int layer_id) const;
  ToyLayer& layer(int layer_id);
};

struct ToyNetOptions {
  int samples = 64;
  // Candidate inputs with any pre-activation within this distance of zero
  // are rejected. Capped at 0.25 / neuron count so wide nets stay samplable.
  double activation_margin = 5e-3;
  double readout_scale = 0.1;
  double target_scale = 1.0;
};

ToyNet make_toy_net(const NetworkSpec& spec, std::uint64_t seed,
                    const ToyNetOptions& options = {});

double toy_loss(const ToyNet& net);
// Exact reverse-mode gradients of toy_loss with respect to every gamma/beta.
BNSnapshot toy_grads(const ToyNet& net);
// toy_loss with (gamma, beta) of one channel zeroed, minus toy_loss.
double toy_loss_delta(const ToyNet& net, int layer_id, int channel);

// `steps` snapshots; between snapshots gamma and beta receive seeded
// Gaussian noise of standard deviation `perturbation`.
std::vector<BNSnapshot> gen_trace(std::uint64_t seed, const NetworkSpec& spec,
                                  int steps, double perturbation = 0.01,
                                  const ToyNetOptions& options = {});

nlohmann::json toy_net_to_json(const ToyNet& net);

}  // namespace latprune

#endif  // LATPRUNE_TRACE_GEN_HPP_
