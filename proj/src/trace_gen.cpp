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

#include "latprune/trace_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "latprune/error.hpp"

namespace latprune {

const ToyLayer& ToyNet::layer(int layer_id) const {
  for (const auto& l : layers) {
    if (l.layer_id == layer_id) return l;
  }
  throw ValidationError("toy net has no layer " + std::to_string(layer_id));
}

ToyLayer& ToyNet::layer(int layer_id) {
  return const_cast<ToyLayer&>(std::as_const(*this).layer(layer_id));
}

namespace {

struct Activations {
  std::vector<std::vector<double>> z, u, h;
};

std::size_t index_of(const ToyNet& net, int layer_id) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].layer_id == layer_id) return i;
  }
  throw ValidationError("toy net has no layer " + std::to_string(layer_id));
}

std::vector<double> joined_input(const ToyNet& net, const ToyLayer& l,
                                 const Activations& a, const double* sample) {
  std::vector<double> x(static_cast<std::size_t>(l.in_width), 0.0);
  if (l.predecessor_ids.empty()) {
    std::copy(sample, sample + std::min(net.input_dim, l.in_width), x.begin());
    return x;
  }
  std::size_t offset = 0;
  for (int pid : l.predecessor_ids) {
    const auto& hp = a.h[index_of(net, pid)];
    const std::size_t base = l.join == JoinRule::kConcat ? offset : 0;
    for (std::size_t k = 0; k < hp.size() && base + k < x.size(); ++k) {
      x[base + k] += hp[k];
    }
    offset += hp.size();
  }
  return x;
}

double forward(const ToyNet& net, const double* sample, Activations& a) {
  const std::size_t n = net.layers.size();
  a.z.assign(n, {});
  a.u.assign(n, {});
  a.h.assign(n, {});
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = net.layers[i];
    const auto x = joined_input(net, l, a, sample);
    auto& z = a.z[i];
    auto& u = a.u[i];
    auto& h = a.h[i];
    z.assign(static_cast<std::size_t>(l.width), 0.0);
    u.resize(z.size());
    h.resize(z.size());
    for (int r = 0; r < l.width; ++r) {
      const double* w = l.weight.data() + static_cast<std::size_t>(r) * l.in_width;
      double acc = 0.0;
      for (int c = 0; c < l.in_width; ++c) acc += w[c] * x[c];
      z[r] = acc;
      u[r] = l.gamma[r] * acc + l.beta[r];
      h[r] = u[r] > 0.0 ? u[r] : 0.0;
    }
    for (std::size_t r = 0; r < l.readout.size(); ++r) y += l.readout[r] * h[r];
  }
  return y;
}

void backward(const ToyNet& net, const Activations& a, double dy,
              BNSnapshot& grads) {
  const std::size_t n = net.layers.size();
  std::vector<std::vector<double>> dh(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = net.layers[i];
    dh[i].assign(static_cast<std::size_t>(l.width), 0.0);
    for (std::size_t r = 0; r < l.readout.size(); ++r) dh[i][r] += dy * l.readout[r];
  }
  for (std::size_t i = n; i-- > 0;) {
    const auto& l = net.layers[i];
    auto& g = grads.layers[l.layer_id];
    std::vector<double> dz(static_cast<std::size_t>(l.width));
    for (int r = 0; r < l.width; ++r) {
      const double du = a.u[i][r] > 0.0 ? dh[i][r] : 0.0;
      g.grad_gamma[r] += du * a.z[i][r];
      g.grad_beta[r] += du;
      dz[r] = du * l.gamma[r];
    }
    if (l.predecessor_ids.empty()) continue;
    std::vector<double> dx(static_cast<std::size_t>(l.in_width), 0.0);
    for (int r = 0; r < l.width; ++r) {
      if (dz[r] == 0.0) continue;
      const double* w = l.weight.data() + static_cast<std::size_t>(r) * l.in_width;
      for (int c = 0; c < l.in_width; ++c) dx[c] += w[c] * dz[r];
    }
    std::size_t offset = 0;
    for (int pid : l.predecessor_ids) {
      auto& dp = dh[index_of(net, pid)];
      const std::size_t base = l.join == JoinRule::kConcat ? offset : 0;
      for (std::size_t k = 0; k < dp.size() && base + k < dx.size(); ++k) {
        dp[k] += dx[base + k];
      }
      offset += dp.size();
    }
  }
}

}  // namespace

ToyNet make_toy_net(const NetworkSpec& spec, std::uint64_t seed,
                    const ToyNetOptions& options) {
  if (options.samples < 1) throw ValidationError("toy net needs at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> gamma_dist(0.5, 1.5);
  std::uniform_real_distribution<double> beta_dist(-0.2, 0.2);

  ToyNet net;
  net.input_dim = spec.input_channels;
  const auto dense = dense_assignment(spec);
  for (int id : topological_order(spec)) {
    const auto& ls = spec.layer(id);
    ToyLayer l;
    l.layer_id = id;
    l.width = ls.out_channels;
    l.in_width = resolve_in_channels(spec, dense, ls);
    if (ls.join == JoinRule::kConcat) l.join = JoinRule::kConcat;
    l.predecessor_ids = ls.predecessor_ids;
    const double wscale = 1.0 / std::sqrt(static_cast<double>(l.in_width));
    l.weight.resize(static_cast<std::size_t>(l.width) * l.in_width);
    for (double& w : l.weight) w = normal(rng) * wscale;
    l.gamma.resize(static_cast<std::size_t>(l.width));
    l.beta.resize(static_cast<std::size_t>(l.width));
    for (double& g : l.gamma) g = gamma_dist(rng);
    for (double& b : l.beta) b = beta_dist(rng);
    if (successors(spec, id).empty()) {
      const double rscale =
          options.readout_scale / std::sqrt(static_cast<double>(l.width));
      l.readout.resize(static_cast<std::size_t>(l.width));
      for (double& r : l.readout) r = normal(rng) * rscale;
    }
    net.layers.push_back(std::move(l));
  }

  // Keep the expected acceptance rate bounded away from zero on wide nets.
  std::size_t neurons = 0;
  for (const auto& l : net.layers) neurons += static_cast<std::size_t>(l.width);
  const double margin = std::min(
      options.activation_margin,
      0.25 / static_cast<double>(std::max<std::size_t>(neurons, 1)));

  Activations a;
  std::vector<double> candidate(static_cast<std::size_t>(net.input_dim));
  const long max_attempts = 10000L * options.samples;
  long attempts = 0;
  while (static_cast<int>(net.targets.size()) < options.samples) {
    if (++attempts > max_attempts) {
      throw ValidationError("could not draw toy samples clear of the activation margin");
    }
    for (double& v : candidate) v = normal(rng);
    forward(net, candidate.data(), a);
    bool clear = true;
    for (const auto& u : a.u) {
      for (double v : u) clear = clear && std::fabs(v) > margin;
    }
    if (!clear) continue;
    net.inputs.insert(net.inputs.end(), candidate.begin(), candidate.end());
    net.targets.push_back(normal(rng) * options.target_scale);
  }
  return net;
}

double toy_loss(const ToyNet& net) {
  Activations a;
  double loss = 0.0;
  const std::size_t m = net.samples();
  for (std::size_t s = 0; s < m; ++s) {
    const double y = forward(net, net.inputs.data() + s * net.input_dim, a);
    const double r = y - net.targets[s];
    loss += r * r;
  }
  return loss / static_cast<double>(m);
}

BNSnapshot toy_grads(const ToyNet& net) {
  BNSnapshot snap;
  for (const auto& l : net.layers) {
    auto& g = snap.layers[l.layer_id];
    g.gamma = l.gamma;
    g.beta = l.beta;
    g.grad_gamma.assign(l.gamma.size(), 0.0);
    g.grad_beta.assign(l.beta.size(), 0.0);
  }
  Activations a;
  const std::size_t m = net.samples();
  for (std::size_t s = 0; s < m; ++s) {
    const double* sample = net.inputs.data() + s * net.input_dim;
    const double y = forward(net, sample, a);
    const double dy = 2.0 * (y - net.targets[s]) / static_cast<double>(m);
    backward(net, a, dy, snap);
  }
  return snap;
}

double toy_loss_delta(const ToyNet& net, int layer_id, int channel) {
  const auto& l = net.layer(layer_id);
  if (channel < 0 || channel >= l.width) {
    throw ValidationError("channel " + std::to_string(channel) + " out of range");
  }
  ToyNet zeroed = net;
  auto& zl = zeroed.layer(layer_id);
  zl.gamma[channel] = 0.0;
  zl.beta[channel] = 0.0;
  return toy_loss(zeroed) - toy_loss(net);
}

std::vector<BNSnapshot> gen_trace(std::uint64_t seed, const NetworkSpec& spec,
                                  int steps, double perturbation,
                                  const ToyNetOptions& options) {
  if (steps < 1) throw ValidationError("trace needs at least one step");
  if (perturbation < 0.0) throw ValidationError("perturbation must be >= 0");
  ToyNet net = make_toy_net(spec, seed, options);
  std::mt19937_64 rng(seed ^ 0x5eedfaceULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<BNSnapshot> trace;
  trace.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    BNSnapshot snap = toy_grads(net);
    snap.step = k;
    trace.push_back(std::move(snap));
    if (perturbation == 0.0) continue;
    for (auto& l : net.layers) {
      for (double& g : l.gamma) g += perturbation * noise(rng);
      for (double& b : l.beta) b += perturbation * noise(rng);
    }
  }
  return trace;
}

nlohmann::json toy_net_to_json(const ToyNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"layer_id", l.layer_id},
                      {"width", l.width},
                      {"in_width", l.in_width},
                      {"predecessor_ids", l.predecessor_ids},
                      {"weight", l.weight},
                      {"gamma", l.gamma},
                      {"beta", l.beta},
                      {"readout", l.readout}});
  }
  return {{"input_dim", net.input_dim},
          {"layers", layers},
          {"inputs", net.inputs},
          {"targets", net.targets}};
}

}  // namespace latprune
