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

#include "neurop/color_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neurop {

namespace {

void init_uniform(FcLayer<float>& layer, std::mt19937_64& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(layer.in_features()));
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (float& w : layer.weight.values()) w = dist(rng);
  for (float& b : layer.bias.values()) b = dist(rng);
}

}  // namespace

NeurOp make_random_neurop(std::size_t features, std::mt19937_64& rng) {
  NeurOp op(features);
  init_uniform(op.encoder, rng);
  init_uniform(op.decoder_hidden, rng);
  init_uniform(op.decoder_out, rng);
  return op;
}

template <typename T>
FoldedNeurOp<T> fold_neurop(const NeurOpParams<T>& params, T strength) {
  const std::size_t f = params.features();
  FoldedNeurOp<T> folded{f, std::vector<T>(3 * f), std::vector<T>(f), &params};
  const T* wh = params.decoder_hidden.weight.data();
  const T* we = params.encoder.weight.data();
  const T* be = params.encoder.bias.data();
  for (std::size_t j = 0; j < f; ++j) {
    double a0 = 0, a1 = 0, a2 = 0;
    double c = params.decoder_hidden.bias[j];
    for (std::size_t k = 0; k < f; ++k) {
      const double w = wh[j * f + k];
      a0 += w * we[3 * k];
      a1 += w * we[3 * k + 1];
      a2 += w * we[3 * k + 2];
      c += w * (static_cast<double>(be[k]) + static_cast<double>(strength));
    }
    folded.a[3 * j] = static_cast<T>(a0);
    folded.a[3 * j + 1] = static_cast<T>(a1);
    folded.a[3 * j + 2] = static_cast<T>(a2);
    folded.c[j] = static_cast<T>(c);
  }
  return folded;
}

template <typename T>
std::vector<T> neurop_encode(const BasicRgb<T>& p, const NeurOpParams<T>& params) {
  BasicTensor<T> x({3}, std::vector<T>(p.begin(), p.end()));
  return fc_apply(x, params.encoder).values();
}

template <typename T>
BasicRgb<T> neurop_decode(const std::vector<T>& z, const NeurOpParams<T>& params) {
  BasicTensor<T> zt({z.size()}, z);
  const BasicTensor<T> y = fc_apply(relu(fc_apply(zt, params.decoder_hidden)), params.decoder_out);
  return {y[0], y[1], y[2]};
}

template <typename T>
BasicRgb<T> neurop_forward(const BasicRgb<T>& p, T strength, const NeurOpParams<T>& params) {
  const FoldedNeurOp<T> folded = fold_neurop(params, strength);
  BasicRgb<T> out{};
  kernels::neurop_map(folded.view(), {&p[0], &p[1], &p[2]}, {&out[0], &out[1], &out[2]}, 1);
  return out;
}

template <typename T>
BasicImage<T> neurop_forward_image(const BasicImage<T>& image, T strength, const NeurOpParams<T>& params) {
  require_rgb(image, "neurop_forward_image");
  const std::size_t n = image.dim(1) * image.dim(2);
  const FoldedNeurOp<T> folded = fold_neurop(params, strength);
  BasicImage<T> out(image.shape());
  const T* in = image.data();
  T* o = out.data();
  kernels::neurop_map(folded.view(), {in, in + n, in + 2 * n}, {o, o + n, o + 2 * n}, n);
  return out;
}

template <typename T>
NeurOpImageGrads<T> neurop_backward_image(const BasicImage<T>& image, T strength, const NeurOpParams<T>& params,
                                          const BasicImage<T>& grad_output, bool want_input_grad) {
  require_rgb(image, "neurop_backward_image");
  image.require_same_shape(grad_output, "neurop_backward_image");
  const std::size_t f = params.features();
  const std::size_t n = image.dim(1) * image.dim(2);
  const FoldedNeurOp<T> folded = fold_neurop(params, strength);

  std::vector<T> g_p(3 * f, T{0}), g_one(f, T{0});
  NeurOpImageGrads<T> grads{NeurOpParams<T>(f), T{0}, {}};
  std::optional<kernels::Planes<T>> grad_in;
  if (want_input_grad) {
    grads.input = BasicImage<T>(image.shape());
    T* gi = grads.input.data();
    grad_in = kernels::Planes<T>{gi, gi + n, gi + 2 * n};
  }
  const T* in = image.data();
  const T* go = grad_output.data();
  kernels::neurop_backward(folded.view(), {in, in + n, in + 2 * n}, {go, go + n, go + 2 * n}, grad_in,
                           {g_p.data(), g_one.data(), grads.params.decoder_out.weight.data(),
                            grads.params.decoder_out.bias.data()},
                           n);

  // Unfold: a = W_h (W_e p + b_e + v) + b_h.
  const T* wh = params.decoder_hidden.weight.data();
  const T* we = params.encoder.weight.data();
  const T* be = params.encoder.bias.data();
  T* d_wh = grads.params.decoder_hidden.weight.data();
  T* d_we = grads.params.encoder.weight.data();
  T* d_be = grads.params.encoder.bias.data();
  for (std::size_t j = 0; j < f; ++j) {
    grads.params.decoder_hidden.bias[j] = g_one[j];
    for (std::size_t k = 0; k < f; ++k) {
      const double z_coeff = static_cast<double>(be[k]) + static_cast<double>(strength);
      d_wh[j * f + k] = static_cast<T>(static_cast<double>(g_p[3 * j]) * we[3 * k] +
                                       static_cast<double>(g_p[3 * j + 1]) * we[3 * k + 1] +
                                       static_cast<double>(g_p[3 * j + 2]) * we[3 * k + 2] +
                                       static_cast<double>(g_one[j]) * z_coeff);
    }
  }
  double d_strength = 0;
  for (std::size_t k = 0; k < f; ++k) {
    double s0 = 0, s1 = 0, s2 = 0, s1v = 0;
    for (std::size_t j = 0; j < f; ++j) {
      const double w = wh[j * f + k];
      s0 += w * g_p[3 * j];
      s1 += w * g_p[3 * j + 1];
      s2 += w * g_p[3 * j + 2];
      s1v += w * g_one[j];
    }
    d_we[3 * k] = static_cast<T>(s0);
    d_we[3 * k + 1] = static_cast<T>(s1);
    d_we[3 * k + 2] = static_cast<T>(s2);
    d_be[k] = static_cast<T>(s1v);
    d_strength += s1v;
  }
  grads.strength = static_cast<T>(d_strength);
  return grads;
}

#define NEUROP_INSTANTIATE_COLOR_OPS(T)                                                                          \
  template FoldedNeurOp<T> fold_neurop(const NeurOpParams<T>&, T);                                               \
  template std::vector<T> neurop_encode(const BasicRgb<T>&, const NeurOpParams<T>&);                             \
  template BasicRgb<T> neurop_decode(const std::vector<T>&, const NeurOpParams<T>&);                             \
  template BasicRgb<T> neurop_forward(const BasicRgb<T>&, T, const NeurOpParams<T>&);                            \
  template BasicImage<T> neurop_forward_image(const BasicImage<T>&, T, const NeurOpParams<T>&);                  \
  template NeurOpImageGrads<T> neurop_backward_image(const BasicImage<T>&, T, const NeurOpParams<T>&,            \
                                                     const BasicImage<T>&, bool);

NEUROP_INSTANTIATE_COLOR_OPS(float)
NEUROP_INSTANTIATE_COLOR_OPS(double)

// --- standard operators ---

std::string_view standard_op_name(StandardOpKind kind) {
  switch (kind) {
    case StandardOpKind::kBlackClipping:
      return "black-clipping";
    case StandardOpKind::kExposure:
      return "exposure";
    case StandardOpKind::kVibrance:
      return "vibrance";
  }
  throw std::invalid_argument("unknown standard operator kind " + std::to_string(static_cast<int>(kind)));
}

StandardOpKind parse_standard_op(std::string_view name) {
  for (StandardOpKind kind : kStandardOpOrder)
    if (standard_op_name(kind) == name) return kind;
  throw std::invalid_argument("unknown standard operator '" + std::string(name) + "'");
}

Rgb standard_op_apply(StandardOpKind kind, const Rgb& p, float strength) {
  auto clamp = [](float x) { return std::clamp(x, 0.0f, 1.0f); };
  switch (kind) {
    case StandardOpKind::kExposure: {
      const float gain = std::exp2(kExposureScale * strength);
      return {clamp(p[0] * gain), clamp(p[1] * gain), clamp(p[2] * gain)};
    }
    case StandardOpKind::kBlackClipping: {
      const float black = kBlackClipScale * strength;
      const float range = 1.0f - black;
      return {clamp((p[0] - black) / range), clamp((p[1] - black) / range), clamp((p[2] - black) / range)};
    }
    case StandardOpKind::kVibrance: {
      const float hi = std::max({p[0], p[1], p[2]});
      const float lo = std::min({p[0], p[1], p[2]});
      // m - (m - p)(1 + s) written as p - (m - p) s, so s = 0 returns p exactly
      const float s = strength * (1.0f - (hi - lo));
      return {clamp(p[0] - (hi - p[0]) * s), clamp(p[1] - (hi - p[1]) * s), clamp(p[2] - (hi - p[2]) * s)};
    }
  }
  throw std::invalid_argument("unknown standard operator kind " + std::to_string(static_cast<int>(kind)));
}

Image standard_op_apply(StandardOpKind kind, const Image& image, float strength) {
  require_rgb(image, "standard_op_apply");
  standard_op_name(kind);  // validates kind
  const std::size_t n = image.dim(1) * image.dim(2);
  Image out(image.shape());
  const float* in = image.data();
  float* o = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb q = standard_op_apply(kind, Rgb{in[i], in[n + i], in[2 * n + i]}, strength);
    o[i] = q[0], o[n + i] = q[1], o[2 * n + i] = q[2];
  }
  return out;
}

}  // namespace neurop
