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

// Forward and backward passes for the fixed layer set used by the color
// operators and strength predictors. Templated on the scalar type: float is
// the working precision, double exists for gradient checking.

#include <cstddef>

#include "neurop/tensor.hpp"

namespace neurop {

template <typename T>
struct FcLayer {
  BasicTensor<T> weight;  // [out, in]
  BasicTensor<T> bias;    // [out]

  FcLayer() = default;
  FcLayer(std::size_t in, std::size_t out) : weight({out, in}), bias({out}) {}

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  template <typename U>
  FcLayer<U> cast() const {
    FcLayer<U> out;
    out.weight = weight.template cast<U>();
    out.bias = bias.template cast<U>();
    return out;
  }
};

template <typename T>
struct FcGrads {
  BasicTensor<T> input;
  FcLayer<T> params;
};

template <typename T>
struct ConvLayer {
  BasicTensor<T> weight;  // [out_c, in_c, k, k]
  BasicTensor<T> bias;    // [out_c]
  std::size_t stride = 1;
  std::size_t padding = 0;

  ConvLayer() = default;
  ConvLayer(std::size_t in_c, std::size_t out_c, std::size_t kernel, std::size_t stride_, std::size_t padding_)
      : weight({out_c, in_c, kernel, kernel}), bias({out_c}), stride(stride_), padding(padding_) {
    if (stride == 0) throw std::invalid_argument("conv stride must be positive");
  }

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel() const { return weight.dim(2); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  /// floor((in + 2 pad - k) / stride) + 1; throws when the kernel does not fit.
  std::size_t output_extent(std::size_t in) const;

  template <typename U>
  ConvLayer<U> cast() const {
    ConvLayer<U> out;
    out.weight = weight.template cast<U>();
    out.bias = bias.template cast<U>();
    out.stride = stride;
    out.padding = padding;
    return out;
  }
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;
  ConvLayer<T> params;
};

/// Which global statistics the pooling layer emits, in [max | avg | std] order.
struct PoolingSet {
  bool max = true;
  bool avg = true;
  bool std = true;

  std::size_t count() const { return std::size_t{max} + std::size_t{avg} + std::size_t{std}; }
  friend bool operator==(const PoolingSet&, const PoolingSet&) = default;
};

template <typename T>
BasicTensor<T> fc_apply(const BasicTensor<T>& x, const FcLayer<T>& layer);
template <typename T>
FcGrads<T> fc_backward(const BasicTensor<T>& x, const FcLayer<T>& layer, const BasicTensor<T>& grad_y);

template <typename T>
BasicTensor<T> conv2d_apply(const BasicTensor<T>& x, const ConvLayer<T>& layer);
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const ConvLayer<T>& layer, const BasicTensor<T>& grad_y);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
/// Gradient is passed only where x > 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_y);

/// Channel-wise global statistics of a [C,H,W] map. Standard deviation is the
/// population one (divide by H*W). The max branch routes its gradient to the
/// first maximal element in row-major order; a zero-variance channel passes no
/// gradient through the std branch.
template <typename T>
BasicTensor<T> stats_pool(const BasicTensor<T>& f, PoolingSet set = {});
template <typename T>
BasicTensor<T> stats_pool_backward(const BasicTensor<T>& f, const BasicTensor<T>& grad_y, PoolingSet set = {});

}  // namespace neurop
