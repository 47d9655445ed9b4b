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

#include "neurop/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace neurop {

namespace {

constexpr double kNormFloor = 1e-6;

template <typename T>
void check_pair(const BasicImage<T>& a, const BasicImage<T>& b, const char* what) {
  require_rgb(a, what);
  a.require_same_shape(b, what);
}

template <typename T>
const T* mask_plane(const BasicImage<T>& pred, const PixelWeights<T>& w) {
  if (w.mask == nullptr) return nullptr;
  if (w.mask->size() != pred.dim(1) * pred.dim(2)) {
    throw std::invalid_argument("mask " + shape_to_string(w.mask->shape()) + " does not match image " +
                                shape_to_string(pred.shape()));
  }
  return w.mask->data();
}

template <typename T>
void require_planar(const BasicImage<T>& img, const char* what) {
  if (img.rank() != 3) {
    throw std::invalid_argument(std::string(what) + ": expected a [C,H,W] image, got " + shape_to_string(img.shape()));
  }
}

template <typename T>
T sign(T x) {
  return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0});
}

}  // namespace

template <typename T>
T loss_reconstruction(const BasicImage<T>& pred, const BasicImage<T>& target, PixelWeights<T> weights) {
  check_pair(pred, target, "loss_reconstruction");
  const std::size_t n = pred.dim(1) * pred.dim(2);
  const T* mask = mask_plane(pred, weights);
  double sum = 0, weight_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = mask && mask[i] > T(0.5) ? static_cast<double>(weights.inside) : 1.0;
    weight_sum += w;
    for (std::size_t c = 0; c < 3; ++c) sum += w * std::abs(static_cast<double>(pred[c * n + i] - target[c * n + i]));
  }
  return static_cast<T>(sum / (3.0 * weight_sum));
}

template <typename T>
BasicImage<T> loss_reconstruction_grad(const BasicImage<T>& pred, const BasicImage<T>& target,
                                       PixelWeights<T> weights) {
  check_pair(pred, target, "loss_reconstruction");
  const std::size_t n = pred.dim(1) * pred.dim(2);
  const T* mask = mask_plane(pred, weights);
  double weight_sum = 0;
  for (std::size_t i = 0; i < n; ++i) weight_sum += mask && mask[i] > T(0.5) ? static_cast<double>(weights.inside) : 1.0;
  const double norm = 1.0 / (3.0 * weight_sum);
  BasicImage<T> g(pred.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (mask && mask[i] > T(0.5) ? static_cast<double>(weights.inside) : 1.0) * norm;
    for (std::size_t c = 0; c < 3; ++c) g[c * n + i] = static_cast<T>(w) * sign(pred[c * n + i] - target[c * n + i]);
  }
  return g;
}

template <typename T>
T loss_tv(const BasicImage<T>& pred) {
  require_planar(pred, "loss_tv");
  const std::size_t channels = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  double sq = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = pred.at(c, y, x);
        if (x + 1 < w) sq += (pred.at(c, y, x + 1) - v) * (pred.at(c, y, x + 1) - v);
        if (y + 1 < h) sq += (pred.at(c, y + 1, x) - v) * (pred.at(c, y + 1, x) - v);
      }
    }
  }
  return static_cast<T>(std::sqrt(sq) / static_cast<double>(pred.size()));
}

template <typename T>
BasicImage<T> loss_tv_grad(const BasicImage<T>& pred) {
  require_planar(pred, "loss_tv");
  const std::size_t channels = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  BasicImage<T> g(pred.shape());
  double sq = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = pred.at(c, y, x);
        if (x + 1 < w) {
          const double d = pred.at(c, y, x + 1) - v;
          sq += d * d;
          g.at(c, y, x + 1) += static_cast<T>(d);
          g.at(c, y, x) -= static_cast<T>(d);
        }
        if (y + 1 < h) {
          const double d = pred.at(c, y + 1, x) - v;
          sq += d * d;
          g.at(c, y + 1, x) += static_cast<T>(d);
          g.at(c, y, x) -= static_cast<T>(d);
        }
      }
    }
  }
  if (sq == 0.0) {
    g.fill(T{0});
    return g;
  }
  const T scale = static_cast<T>(1.0 / (std::sqrt(sq) * static_cast<double>(pred.size())));
  for (T& v : g.values()) v *= scale;
  return g;
}

template <typename T>
T loss_color(const BasicImage<T>& pred, const BasicImage<T>& target) {
  check_pair(pred, target, "loss_color");
  const std::size_t n = pred.dim(1) * pred.dim(2);
  double cos_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double a = pred[c * n + i], b = target[c * n + i];
      dot += a * b, na += a * a, nb += b * b;
    }
    na = std::sqrt(na), nb = std::sqrt(nb);
    if (na < kNormFloor && nb < kNormFloor) {
      cos_sum += 1.0;
    } else {
      cos_sum += dot / (std::max(na, kNormFloor) * std::max(nb, kNormFloor));
    }
  }
  return static_cast<T>(1.0 - cos_sum / static_cast<double>(n));
}

template <typename T>
BasicImage<T> loss_color_grad(const BasicImage<T>& pred, const BasicImage<T>& target) {
  check_pair(pred, target, "loss_color");
  const std::size_t n = pred.dim(1) * pred.dim(2);
  BasicImage<T> g(pred.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a[3], b[3], dot = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      a[c] = pred[c * n + i], b[c] = target[c * n + i];
      dot += a[c] * b[c], na += a[c] * a[c], nb += b[c] * b[c];
    }
    na = std::sqrt(na), nb = std::sqrt(nb);
    if (na < kNormFloor && nb < kNormFloor) continue;
    const double nb_f = std::max(nb, kNormFloor);
    for (std::size_t c = 0; c < 3; ++c) {
      double dcos;
      if (na > kNormFloor) {
        dcos = b[c] / (na * nb_f) - dot * a[c] / (na * na * na * nb_f);
      } else {
        dcos = b[c] / (kNormFloor * nb_f);
      }
      g[c * n + i] = static_cast<T>(-dcos * inv_n);
    }
  }
  return g;
}

template <typename T>
LossBreakdown<T> loss_total(const BasicImage<T>& pred, const BasicImage<T>& target, const LossWeights& weights,
                            PixelWeights<T> pixel_weights, bool want_grad) {
  check_pair(pred, target, "loss_total");
  if (weights.lambda_tv < 0 || weights.lambda_color < 0) throw std::invalid_argument("loss weights must be >= 0");
  LossBreakdown<T> out;
  if (want_grad) out.grad = BasicImage<T>(pred.shape());
  auto add_grad = [&](const BasicImage<T>& g, double scale) {
    for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] += static_cast<T>(scale * g[i]);
  };
  double total = 0;
  if (weights.use_reconstruction) {
    out.reconstruction = loss_reconstruction(pred, target, pixel_weights);
    total += out.reconstruction;
    if (want_grad) add_grad(loss_reconstruction_grad(pred, target, pixel_weights), 1.0);
  }
  if (weights.use_tv) {
    out.tv = loss_tv(pred);
    total += weights.lambda_tv * out.tv;
    if (want_grad) add_grad(loss_tv_grad(pred), weights.lambda_tv);
  }
  if (weights.use_color) {
    out.color = loss_color(pred, target);
    total += weights.lambda_color * out.color;
    if (want_grad) add_grad(loss_color_grad(pred, target), weights.lambda_color);
  }
  out.total = static_cast<T>(total);
  return out;
}

#define NEUROP_INSTANTIATE_LOSSES(T)                                                                          \
  template T loss_reconstruction(const BasicImage<T>&, const BasicImage<T>&, PixelWeights<T>);               \
  template BasicImage<T> loss_reconstruction_grad(const BasicImage<T>&, const BasicImage<T>&, PixelWeights<T>); \
  template T loss_tv(const BasicImage<T>&);                                                                  \
  template BasicImage<T> loss_tv_grad(const BasicImage<T>&);                                                 \
  template T loss_color(const BasicImage<T>&, const BasicImage<T>&);                                         \
  template BasicImage<T> loss_color_grad(const BasicImage<T>&, const BasicImage<T>&);                        \
  template LossBreakdown<T> loss_total(const BasicImage<T>&, const BasicImage<T>&, const LossWeights&,       \
                                       PixelWeights<T>, bool);

NEUROP_INSTANTIATE_LOSSES(float)
NEUROP_INSTANTIATE_LOSSES(double)

}  // namespace neurop
