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

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "neurop/kernels.hpp"
#include "neurop/layers.hpp"
#include "neurop/tensor.hpp"

namespace neurop {

template <typename T>
using BasicRgb = std::array<T, 3>;
using Rgb = BasicRgb<float>;

/// Learned pixelwise color map R(p, v) = D(E(p) + v * 1): a linear encoder
/// into an F-dimensional feature space, a translation along the all-ones
/// direction, and a two-layer decoder (ReLU hidden layer).
template <typename T>
struct NeurOpParams {
  FcLayer<T> encoder;         // 3 -> F
  FcLayer<T> decoder_hidden;  // F -> F, ReLU
  FcLayer<T> decoder_out;     // F -> 3

  NeurOpParams() = default;
  explicit NeurOpParams(std::size_t features)
      : encoder(3, features), decoder_hidden(features, features), decoder_out(features, 3) {}

  std::size_t features() const { return encoder.out_features(); }
  std::size_t parameter_count() const {
    return encoder.parameter_count() + decoder_hidden.parameter_count() + decoder_out.parameter_count();
  }

  /// Fixed order shared by the optimizer, weight files and gradient checks.
  std::vector<BasicTensor<T>*> tensors() {
    return {&encoder.weight, &encoder.bias, &decoder_hidden.weight, &decoder_hidden.bias, &decoder_out.weight,
            &decoder_out.bias};
  }
  std::vector<const BasicTensor<T>*> tensors() const {
    return {&encoder.weight, &encoder.bias, &decoder_hidden.weight, &decoder_hidden.bias, &decoder_out.weight,
            &decoder_out.bias};
  }

  template <typename U>
  NeurOpParams<U> cast() const {
    NeurOpParams<U> out;
    out.encoder = encoder.template cast<U>();
    out.decoder_hidden = decoder_hidden.template cast<U>();
    out.decoder_out = decoder_out.template cast<U>();
    return out;
  }

  friend bool operator==(const NeurOpParams& a, const NeurOpParams& b) {
    return a.encoder.weight == b.encoder.weight && a.encoder.bias == b.encoder.bias &&
           a.decoder_hidden.weight == b.decoder_hidden.weight && a.decoder_hidden.bias == b.decoder_hidden.bias &&
           a.decoder_out.weight == b.decoder_out.weight && a.decoder_out.bias == b.decoder_out.bias;
  }
};

using NeurOp = NeurOpParams<float>;

/// 3F + F + F^2 + F + 3F + 3; 4,611 for F = 64.
constexpr std::size_t neurop_parameter_count(std::size_t features) {
  return 3 * features + features + features * features + features + 3 * features + 3;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
NeurOp make_random_neurop(std::size_t features, std::mt19937_64& rng);

/// The operator with its encoder and translation folded into the first
/// decoder layer, for one fixed strength.
template <typename T>
struct FoldedNeurOp {
  std::size_t features = 0;
  std::vector<T> a;  // [F, 3] = W_hidden * W_enc
  std::vector<T> c;  // [F]    = W_hidden * (b_enc + v) + b_hidden
  const NeurOpParams<T>* params = nullptr;

  kernels::FoldedOperator<T> view() const {
    return {features, a.data(), c.data(), params->decoder_out.weight.data(), params->decoder_out.bias.data()};
  }
};

template <typename T>
FoldedNeurOp<T> fold_neurop(const NeurOpParams<T>& params, T strength);

/// E(p): the F-dimensional feature vector of a color.
template <typename T>
std::vector<T> neurop_encode(const BasicRgb<T>& p, const NeurOpParams<T>& params);
/// D(z).
template <typename T>
BasicRgb<T> neurop_decode(const std::vector<T>& z, const NeurOpParams<T>& params);

/// R(p, v). Unclamped; strengths outside [-1, 1] extrapolate.
template <typename T>
BasicRgb<T> neurop_forward(const BasicRgb<T>& p, T strength, const NeurOpParams<T>& params);

/// R applied to every pixel of a [3,H,W] image. Bit-identical to mapping
/// neurop_forward over the pixels.
template <typename T>
BasicImage<T> neurop_forward_image(const BasicImage<T>& image, T strength, const NeurOpParams<T>& params);

template <typename T>
struct NeurOpImageGrads {
  NeurOpParams<T> params;
  T strength = 0;
  BasicImage<T> input;  // empty unless requested
};

/// Reverse pass of neurop_forward_image given dLoss/dOutput.
template <typename T>
NeurOpImageGrads<T> neurop_backward_image(const BasicImage<T>& image, T strength, const NeurOpParams<T>& params,
                                          const BasicImage<T>& grad_output, bool want_input_grad);

// --- analytic stand-ins for the standard retouching operators ---

enum class StandardOpKind : std::uint8_t { kBlackClipping, kExposure, kVibrance };

inline constexpr std::array<StandardOpKind, 3> kStandardOpOrder = {
    StandardOpKind::kBlackClipping, StandardOpKind::kExposure, StandardOpKind::kVibrance};

std::string_view standard_op_name(StandardOpKind kind);
/// Accepts "black-clipping", "exposure", "vibrance"; throws std::invalid_argument otherwise.
StandardOpKind parse_standard_op(std::string_view name);

inline constexpr float kExposureScale = 1.5f;     // p * 2^(1.5 v)
inline constexpr float kBlackClipScale = 0.25f;  // black point b = 0.25 v

/// Exposure:        p' = clamp(p * 2^(1.5 v))
/// Black clipping:  p' = clamp((p - b) / (1 - b)),  b = 0.25 v
/// Vibrance:        p' = clamp(m - (m - p)(1 + v (1 - sat))),  m = max(rgb), sat = m - min(rgb)
/// Each is the identity at v = 0.
Image standard_op_apply(StandardOpKind kind, const Image& image, float strength);
Rgb standard_op_apply(StandardOpKind kind, const Rgb& p, float strength);

}  // namespace neurop
