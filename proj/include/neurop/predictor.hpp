// Copyright 2026 The neurop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <random>
#include <vector>

#include "neurop/layers.hpp"
#include "neurop/tensor.hpp"

namespace neurop {

/// Backbone geometry. The defaults (3->32 k7s2p1, 32->32 k3s2p1, three
/// pooling statistics, shared backbone) give 13,984 backbone parameters and
/// 97 per head.
struct PredictorConfig {
  std::size_t first_channels = 32;
  std::size_t first_kernel = 7;
  std::size_t second_channels = 32;
  std::size_t second_kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 1;
  PoolingSet pooling{};
  bool share_backbone = true;

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

template <typename T>
struct Backbone {
  ConvLayer<T> conv1;
  ConvLayer<T> conv2;
};

/// Strength predictors P_1..P_K: conv -> ReLU -> conv -> ReLU -> global
/// [max | avg | std] pooling -> per-operator FC head -> tanh.
template <typename T>
struct PredictorParams {
  std::vector<Backbone<T>> backbones;  // one if shared, else one per head
  std::vector<FcLayer<T>> heads;
  PoolingSet pooling{};

  PredictorParams() = default;
  PredictorParams(const PredictorConfig& config, std::size_t head_count);

  std::size_t head_count() const { return heads.size(); }
  bool shared() const { return backbones.size() == 1; }
  const Backbone<T>& backbone_for(std::size_t k) const { return backbones[shared() ? 0 : k]; }
  Backbone<T>& backbone_for(std::size_t k) { return backbones[shared() ? 0 : k]; }
  std::size_t parameter_count() const;

  std::vector<BasicTensor<T>*> tensors();
  std::vector<const BasicTensor<T>*> tensors() const;

  template <typename U>
  PredictorParams<U> cast() const {
    PredictorParams<U> out;
    for (const auto& b : backbones) out.backbones.push_back({b.conv1.template cast<U>(), b.conv2.template cast<U>()});
    for (const auto& h : heads) out.heads.push_back(h.template cast<U>());
    out.pooling = pooling;
    return out;
  }
};

using Predictor = PredictorParams<float>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
Predictor make_random_predictor(const PredictorConfig& config, std::size_t head_count, std::mt19937_64& rng);

/// Intermediate activations kept for the reverse pass.
template <typename T>
struct PredictorTrace {
  std::size_t head = 0;
  BasicImage<T> input;
  BasicTensor<T> conv1;  // pre-activation
  BasicTensor<T> act1;
  BasicTensor<T> conv2;
  BasicTensor<T> act2;
  BasicTensor<T> pooled;
  T strength = 0;
};

/// v_k in (-1, 1) for the (0-based) head `k` from a downsampled image.
/// Throws std::invalid_argument when k is out of range.
template <typename T>
T predict_strength(const BasicImage<T>& small, const PredictorParams<T>& params, std::size_t k);

template <typename T>
PredictorTrace<T> predictor_forward(const BasicImage<T>& small, const PredictorParams<T>& params, std::size_t k);

/// Accumulates parameter gradients into `grads` (same layout as params) and
/// returns dLoss/dInput.
template <typename T>
BasicImage<T> predictor_backward(const PredictorTrace<T>& trace, const PredictorParams<T>& params, T grad_strength,
                                 PredictorParams<T>& grads);

}  // namespace neurop
