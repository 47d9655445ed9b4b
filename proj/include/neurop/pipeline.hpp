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
#include <span>
#include <vector>

#include "neurop/color_ops.hpp"
#include "neurop/predictor.hpp"
#include "neurop/tensor.hpp"

namespace neurop {

// --- bilinear resampling ---

/// Output size with the long edge shortened to `target` (aspect preserved,
/// short edge rounded, at least 1). Images already within `target` keep
/// their size.
std::pair<std::size_t, std::size_t> long_edge_size(std::size_t height, std::size_t width, std::size_t target);

/// Bilinear resize with half-pixel centers (edge-clamped taps).
template <typename T>
BasicImage<T> resize_bilinear(const BasicImage<T>& image, std::size_t height, std::size_t width);
/// Adjoint of resize_bilinear: scatters an output gradient back to the input grid.
template <typename T>
BasicImage<T> resize_bilinear_backward(const BasicImage<T>& grad_output, std::size_t in_height, std::size_t in_width);

/// Shrinks so that max(H, W) == target; never upsamples (returns the input
/// unchanged when it already fits). Throws on target == 0 or an empty image.
template <typename T>
BasicImage<T> downsample_long_edge(const BasicImage<T>& image, std::size_t target);

// --- model ---

struct ModelConfig {
  std::size_t operators = 3;  // K
  std::size_t features = 64;  // F
  PredictorConfig predictor{};
  std::size_t downsample_target = 256;
  /// Ablation: predictors look at the original input instead of I_{k-1}.
  bool predictor_sees_original = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct BasicRetouchModel {
  ModelConfig config;
  std::vector<NeurOpParams<T>> neurops;  // not shared across k
  PredictorParams<T> predictors;

  BasicRetouchModel() = default;
  /// Zero-filled parameters with the shapes `config` implies.
  explicit BasicRetouchModel(const ModelConfig& config);

  std::size_t operator_count() const { return neurops.size(); }
  std::size_t parameter_count() const;

  /// Neural operators first (in order), then predictor tensors.
  std::vector<BasicTensor<T>*> tensors();
  std::vector<const BasicTensor<T>*> tensors() const;

  template <typename U>
  BasicRetouchModel<U> cast() const {
    BasicRetouchModel<U> out;
    out.config = config;
    for (const auto& op : neurops) out.neurops.push_back(op.template cast<U>());
    out.predictors = predictors.template cast<U>();
    return out;
  }
};

using RetouchModel = BasicRetouchModel<float>;

/// Random operators and predictors.
RetouchModel make_random_model(const ModelConfig& config, std::uint64_t seed);

struct ParameterSummary {
  std::size_t per_operator = 0;
  std::size_t operators = 0;
  std::size_t backbone = 0;
  std::size_t heads = 0;
  std::size_t total = 0;
};

ParameterSummary summarize_parameters(const RetouchModel& model);

struct RetouchResult {
  Image output;                     // clamped to [0, 1]
  std::vector<float> strengths;     // v_1..v_K
  std::vector<Image> intermediates; // I_1..I_K as emitted (clamped); back() == output
};

/// One operator application on an unclamped intermediate.
Image retouch_step(const Image& previous, const RetouchModel& model, std::size_t k, float strength);

/// Predicted strength for step k given the current intermediate (and the
/// original input, used only by the predictor_sees_original ablation).
float predict_step_strength(const Image& previous, const Image& original, const RetouchModel& model, std::size_t k);

/// Automatic retouching: for k = 1..K, predict v_k from the downsampled I_{k-1}
/// and apply the k-th operator.
RetouchResult retouch(const Image& image, const RetouchModel& model);

/// Replay with given strengths; predictors are bypassed. Throws
/// std::invalid_argument unless strengths.size() == K.
Image retouch_with_strengths(const Image& image, const RetouchModel& model, std::span<const float> strengths);

}  // namespace neurop
