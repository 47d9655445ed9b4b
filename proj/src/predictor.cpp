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

#include "neurop/predictor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace neurop {

template <typename T>
PredictorParams<T>::PredictorParams(const PredictorConfig& config, std::size_t head_count) : pooling(config.pooling) {
  if (head_count == 0) throw std::invalid_argument("predictor needs at least one head");
  if (config.pooling.count() == 0) throw std::invalid_argument("predictor needs at least one pooling function");
  const std::size_t copies = config.share_backbone ? 1 : head_count;
  for (std::size_t i = 0; i < copies; ++i) {
    backbones.push_back({ConvLayer<T>(3, config.first_channels, config.first_kernel, config.stride, config.padding),
                         ConvLayer<T>(config.first_channels, config.second_channels, config.second_kernel,
                                      config.stride, config.padding)});
  }
  for (std::size_t i = 0; i < head_count; ++i) heads.emplace_back(config.second_channels * config.pooling.count(), 1);
}

template <typename T>
std::size_t PredictorParams<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& b : backbones) total += b.conv1.parameter_count() + b.conv2.parameter_count();
  for (const auto& h : heads) total += h.parameter_count();
  return total;
}

template <typename T>
std::vector<BasicTensor<T>*> PredictorParams<T>::tensors() {
  std::vector<BasicTensor<T>*> out;
  for (auto& b : backbones) {
    out.insert(out.end(), {&b.conv1.weight, &b.conv1.bias, &b.conv2.weight, &b.conv2.bias});
  }
  for (auto& h : heads) out.insert(out.end(), {&h.weight, &h.bias});
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> PredictorParams<T>::tensors() const {
  std::vector<const BasicTensor<T>*> out;
  for (const auto& b : backbones) {
    out.insert(out.end(), {&b.conv1.weight, &b.conv1.bias, &b.conv2.weight, &b.conv2.bias});
  }
  for (const auto& h : heads) out.insert(out.end(), {&h.weight, &h.bias});
  return out;
}

Predictor make_random_predictor(const PredictorConfig& config, std::size_t head_count, std::mt19937_64& rng) {
  Predictor p(config, head_count);
  auto fill = [&rng](BasicTensor<float>& w, BasicTensor<float>& b, std::size_t fan_in) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& x : w.values()) x = dist(rng);
    for (float& x : b.values()) x = dist(rng);
  };
  for (auto& b : p.backbones) {
    fill(b.conv1.weight, b.conv1.bias, b.conv1.in_channels() * b.conv1.kernel() * b.conv1.kernel());
    fill(b.conv2.weight, b.conv2.bias, b.conv2.in_channels() * b.conv2.kernel() * b.conv2.kernel());
  }
  for (auto& h : p.heads) fill(h.weight, h.bias, h.in_features());
  return p;
}

template <typename T>
PredictorTrace<T> predictor_forward(const BasicImage<T>& small, const PredictorParams<T>& params, std::size_t k) {
  if (k >= params.head_count()) {
    throw std::invalid_argument("predictor head " + std::to_string(k) + " out of range (have " +
                                std::to_string(params.head_count()) + ")");
  }
  require_rgb(small, "predict_strength");
  const Backbone<T>& bb = params.backbone_for(k);
  PredictorTrace<T> t;
  t.head = k;
  t.input = small;
  t.conv1 = conv2d_apply(small, bb.conv1);
  t.act1 = relu(t.conv1);
  t.conv2 = conv2d_apply(t.act1, bb.conv2);
  t.act2 = relu(t.conv2);
  t.pooled = stats_pool(t.act2, params.pooling);
  t.strength = std::tanh(fc_apply(t.pooled, params.heads[k])[0]);
  return t;
}

template <typename T>
T predict_strength(const BasicImage<T>& small, const PredictorParams<T>& params, std::size_t k) {
  return predictor_forward(small, params, k).strength;
}

template <typename T>
BasicImage<T> predictor_backward(const PredictorTrace<T>& t, const PredictorParams<T>& params, T grad_strength,
                                 PredictorParams<T>& grads) {
  const std::size_t k = t.head;
  const Backbone<T>& bb = params.backbone_for(k);
  Backbone<T>& gbb = grads.backbone_for(k);

  BasicTensor<T> g_head({1}, std::vector<T>{grad_strength * (T{1} - t.strength * t.strength)});
  FcGrads<T> head = fc_backward(t.pooled, params.heads[k], g_head);
  grads.heads[k].weight += head.params.weight;
  grads.heads[k].bias += head.params.bias;

  const BasicTensor<T> g_act2 = stats_pool_backward(t.act2, head.input, params.pooling);
  ConvGrads<T> c2 = conv2d_backward(t.act1, bb.conv2, relu_backward(t.conv2, g_act2));
  gbb.conv2.weight += c2.params.weight;
  gbb.conv2.bias += c2.params.bias;
  ConvGrads<T> c1 = conv2d_backward(t.input, bb.conv1, relu_backward(t.conv1, c2.input));
  gbb.conv1.weight += c1.params.weight;
  gbb.conv1.bias += c1.params.bias;
  return std::move(c1.input);
}

#define NEUROP_INSTANTIATE_PREDICTOR(T)                                                                       \
  template struct PredictorParams<T>;                                                                        \
  template T predict_strength(const BasicImage<T>&, const PredictorParams<T>&, std::size_t);                 \
  template PredictorTrace<T> predictor_forward(const BasicImage<T>&, const PredictorParams<T>&, std::size_t); \
  template BasicImage<T> predictor_backward(const PredictorTrace<T>&, const PredictorParams<T>&, T,          \
                                            PredictorParams<T>&);

NEUROP_INSTANTIATE_PREDICTOR(float)
NEUROP_INSTANTIATE_PREDICTOR(double)

}  // namespace neurop
