// Copyright 2026 The THzVR Authors. All Rights Reserved.
//
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

#ifndef THZVR_POLICY_NET_HPP_
#define THZVR_POLICY_NET_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "thzvr/env.hpp"

namespace thzvr {

struct LayerShape {
  int in = 0;
  int out = 0;

  std::size_t param_count() const {
    return static_cast<std::size_t>(in) * out + static_cast<std::size_t>(out);
  }
  bool operator==(const LayerShape&) const = default;
};

enum class Activation { kTanh, kRelu };

// Flat parameter vector of a feedforward softmax policy. Layer l occupies
// a contiguous block: an out x in column-major weight matrix followed by
// out biases. The last layer's width is the action count.
struct PolicyParams {
  Eigen::VectorXd flat;
  std::vector<LayerShape> layers;
  Activation activation = Activation::kTanh;

  std::size_t action_count() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t size() const { return static_cast<std::size_t>(flat.size()); }
};

std::vector<LayerShape> make_layer_shapes(int input, const std::vector<int>& hidden,
                                          int actions);

// Weights ~ N(0, 1/fan_in), zero biases. Throws if consecutive shapes do
// not chain.
PolicyParams init_params(const std::vector<LayerShape>& layers, std::uint64_t seed,
                         Activation activation = Activation::kTanh);

// [x/room, y/room, height/ceiling] per user, then the served bits.
Eigen::VectorXd encode_state(const EnvState& state, const ScenarioConfig& config);

// Softmax probabilities. Throws on non-finite logits (NaN parameters).
Eigen::VectorXd forward(const PolicyParams& params, const Eigen::VectorXd& encoding);

double log_prob(const PolicyParams& params, const Eigen::VectorXd& encoding,
                std::size_t action);

// grad += scale * d/dtheta log pi(action | encoding)
void accumulate_grad_log_prob(const PolicyParams& params,
                              const Eigen::VectorXd& encoding, std::size_t action,
                              double scale, Eigen::Ref<Eigen::VectorXd> grad);

Eigen::VectorXd grad_log_prob(const PolicyParams& params,
                              const Eigen::VectorXd& encoding, std::size_t action);

std::size_t sample_action(const Eigen::VectorXd& probs, std::mt19937_64& rng);

// Binary checkpoint; layout documented in README.
struct Checkpoint {
  PolicyParams params;
  std::string algorithm;
  std::uint64_t config_hash = 0;
};
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace thzvr

#endif  // THZVR_POLICY_NET_HPP_
