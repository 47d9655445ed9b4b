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

#include "neurop/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neurop/kernels.hpp"

namespace neurop {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
std::size_t ConvLayer<T>::output_extent(std::size_t in) const {
  const std::size_t padded = in + 2 * padding;
  if (kernel() > padded) {
    throw std::invalid_argument("conv kernel " + std::to_string(kernel()) + " larger than padded input " +
                                std::to_string(padded));
  }
  return (padded - kernel()) / stride + 1;
}

template <typename T>
BasicTensor<T> fc_apply(const BasicTensor<T>& x, const FcLayer<T>& layer) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.size() != in) {
    throw std::invalid_argument("fc_apply: input length " + std::to_string(x.size()) + " != layer input width " +
                                std::to_string(in));
  }
  BasicTensor<T> y({out});
  for (std::size_t o = 0; o < out; ++o) {
    T acc = layer.bias[o];
    const T* w = layer.weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  return y;
}

template <typename T>
FcGrads<T> fc_backward(const BasicTensor<T>& x, const FcLayer<T>& layer, const BasicTensor<T>& grad_y) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.size() != in || grad_y.size() != out) throw std::invalid_argument("fc_backward: shape mismatch");
  FcGrads<T> g{BasicTensor<T>({in}), FcLayer<T>(in, out)};
  for (std::size_t o = 0; o < out; ++o) {
    const T gy = grad_y[o];
    g.params.bias[o] = gy;
    const T* w = layer.weight.data() + o * in;
    T* gw = g.params.weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      gw[i] = gy * x[i];
      g.input[i] += w[i] * gy;
    }
  }
  return g;
}

namespace {

struct ConvGeometry {
  std::size_t in_c, in_h, in_w, out_c, out_h, out_w, k, stride, pad;
  std::size_t patch() const { return in_c * k * k; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry geometry(const BasicTensor<T>& x, const ConvLayer<T>& layer) {
  if (x.rank() != 3 || x.dim(0) != layer.in_channels()) {
    throw std::invalid_argument("conv2d: input " + shape_to_string(x.shape()) + " incompatible with " +
                                std::to_string(layer.in_channels()) + " input channels");
  }
  return {x.dim(0), x.dim(1), x.dim(2), layer.out_channels(), layer.output_extent(x.dim(1)),
          layer.output_extent(x.dim(2)), layer.kernel(), layer.stride, layer.padding};
}

// cols: [in_c*k*k, out_h*out_w]
template <typename T>
std::vector<T> im2col(const BasicTensor<T>& x, const ConvGeometry& g) {
  std::vector<T> cols(g.patch() * g.out_pixels(), T{0});
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = cols.data() + ((c * g.k + ky) * g.k + kx) * g.out_pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            row[oy * g.out_w + ox] = x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im(const std::vector<T>& cols, const ConvGeometry& g, BasicTensor<T>& dx) {
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = cols.data() + ((c * g.k + ky) * g.k + kx) * g.out_pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dx.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> transpose(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_apply(const BasicTensor<T>& x, const ConvLayer<T>& layer) {
  const ConvGeometry g = geometry(x, layer);
  const std::vector<T> cols = im2col(x, g);
  BasicTensor<T> y({g.out_c, g.out_h, g.out_w});
  kernels::gemm(g.out_c, g.out_pixels(), g.patch(), layer.weight.data(), cols.data(), y.data(), false);
  for (std::size_t o = 0; o < g.out_c; ++o) {
    T* plane = y.data() + o * g.out_pixels();
    for (std::size_t i = 0; i < g.out_pixels(); ++i) plane[i] += layer.bias[o];
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const ConvLayer<T>& layer, const BasicTensor<T>& grad_y) {
  const ConvGeometry g = geometry(x, layer);
  if (grad_y.shape() != Shape{g.out_c, g.out_h, g.out_w}) {
    throw std::invalid_argument("conv2d_backward: gradient shape " + shape_to_string(grad_y.shape()));
  }
  ConvGrads<T> out{BasicTensor<T>(x.shape()), ConvLayer<T>(g.in_c, g.out_c, g.k, g.stride, g.pad)};
  const std::vector<T> cols = im2col(x, g);

  // dW[out_c, patch] = dY[out_c, P] * cols^T[P, patch]
  const std::vector<T> cols_t = transpose(cols.data(), g.patch(), g.out_pixels());
  kernels::gemm(g.out_c, g.patch(), g.out_pixels(), grad_y.data(), cols_t.data(), out.params.weight.data(), false);
  for (std::size_t o = 0; o < g.out_c; ++o) {
    const T* plane = grad_y.data() + o * g.out_pixels();
    T acc = 0;
    for (std::size_t i = 0; i < g.out_pixels(); ++i) acc += plane[i];
    out.params.bias[o] = acc;
  }

  // dcols[patch, P] = W^T[patch, out_c] * dY[out_c, P]
  const std::vector<T> w_t = transpose(layer.weight.data(), g.out_c, g.patch());
  std::vector<T> dcols(g.patch() * g.out_pixels());
  kernels::gemm(g.patch(), g.out_pixels(), g.out_c, w_t.data(), grad_y.data(), dcols.data(), false);
  col2im(dcols, g, out.input);
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.values()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_y) {
  x.require_same_shape(grad_y, "relu_backward");
  BasicTensor<T> g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x[i] > T{0})) g[i] = T{0};
  return g;
}

namespace {

template <typename T>
struct ChannelStats {
  std::size_t argmax;
  T max, mean, var;
};

template <typename T>
ChannelStats<T> channel_stats(const T* plane, std::size_t n) {
  ChannelStats<T> s{0, plane[0], 0, 0};
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (plane[i] > s.max) s.max = plane[i], s.argmax = i;
    sum += plane[i];
  }
  s.mean = sum / static_cast<T>(n);
  T sq = 0;
  for (std::size_t i = 0; i < n; ++i) sq += (plane[i] - s.mean) * (plane[i] - s.mean);
  s.var = sq / static_cast<T>(n);
  return s;
}

template <typename T>
std::size_t checked_spatial(const BasicTensor<T>& f) {
  if (f.rank() != 3) throw std::invalid_argument("stats_pool: expected [C,H,W], got " + shape_to_string(f.shape()));
  const std::size_t n = f.dim(1) * f.dim(2);
  if (n == 0) throw std::invalid_argument("stats_pool: empty spatial extent");
  return n;
}

}  // namespace

template <typename T>
BasicTensor<T> stats_pool(const BasicTensor<T>& f, PoolingSet set) {
  const std::size_t n = checked_spatial(f);
  const std::size_t c = f.dim(0);
  if (set.count() == 0) throw std::invalid_argument("stats_pool: no pooling function enabled");
  BasicTensor<T> y({set.count() * c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const ChannelStats<T> s = channel_stats(f.data() + ch * n, n);
    std::size_t slot = 0;
    if (set.max) y[slot++ * c + ch] = s.max;
    if (set.avg) y[slot++ * c + ch] = s.mean;
    if (set.std) y[slot++ * c + ch] = std::sqrt(s.var);
  }
  return y;
}

template <typename T>
BasicTensor<T> stats_pool_backward(const BasicTensor<T>& f, const BasicTensor<T>& grad_y, PoolingSet set) {
  const std::size_t n = checked_spatial(f);
  const std::size_t c = f.dim(0);
  if (grad_y.size() != set.count() * c) throw std::invalid_argument("stats_pool_backward: gradient length mismatch");
  BasicTensor<T> g(f.shape());
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* plane = f.data() + ch * n;
    T* gp = g.data() + ch * n;
    const ChannelStats<T> s = channel_stats(plane, n);
    std::size_t slot = 0;
    if (set.max) gp[s.argmax] += grad_y[slot++ * c + ch];
    if (set.avg) {
      const T ga = grad_y[slot++ * c + ch] * inv_n;
      for (std::size_t i = 0; i < n; ++i) gp[i] += ga;
    }
    if (set.std) {
      const T gs = grad_y[slot++ * c + ch];
      const T sd = std::sqrt(std::max(s.var, T(1e-12)));
      const T scale = gs * inv_n / sd;
      for (std::size_t i = 0; i < n; ++i) gp[i] += scale * (plane[i] - s.mean);
    }
  }
  return g;
}

#define NEUROP_INSTANTIATE_LAYERS(T)                                                                   \
  template struct ConvLayer<T>;                                                                       \
  template BasicTensor<T> fc_apply(const BasicTensor<T>&, const FcLayer<T>&);                         \
  template FcGrads<T> fc_backward(const BasicTensor<T>&, const FcLayer<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> conv2d_apply(const BasicTensor<T>&, const ConvLayer<T>&);                   \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const ConvLayer<T>&,                   \
                                        const BasicTensor<T>&);                                       \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                                \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> stats_pool(const BasicTensor<T>&, PoolingSet);                              \
  template BasicTensor<T> stats_pool_backward(const BasicTensor<T>&, const BasicTensor<T>&, PoolingSet);

NEUROP_INSTANTIATE_LAYERS(float)
NEUROP_INSTANTIATE_LAYERS(double)

}  // namespace neurop
