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

#include "neurop/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace neurop {

std::pair<std::size_t, std::size_t> long_edge_size(std::size_t height, std::size_t width, std::size_t target) {
  if (target == 0) throw std::invalid_argument("downsample target must be at least 1");
  if (height == 0 || width == 0) throw std::invalid_argument("cannot resize an empty image");
  const std::size_t longest = std::max(height, width);
  if (longest <= target) return {height, width};
  const double scale = static_cast<double>(target) / static_cast<double>(longest);
  auto shrink = [&](std::size_t d) {
    if (d == longest) return target;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(d) * scale)));
  };
  return {shrink(height), shrink(width)};
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double w_hi;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> t(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(src);
    const std::size_t hi = std::min(lo + 1, in - 1);
    t[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return t;
}

}  // namespace

template <typename T>
BasicImage<T> resize_bilinear(const BasicImage<T>& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3) throw std::invalid_argument("resize_bilinear: expected [C,H,W]");
  const std::size_t c = image.dim(0), ih = image.dim(1), iw = image.dim(2);
  const std::vector<Tap> ty = taps(ih, height), tx = taps(iw, width);
  BasicImage<T> out({c, height, width});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < height; ++y) {
      const T wy = static_cast<T>(ty[y].w_hi);
      for (std::size_t x = 0; x < width; ++x) {
        const T wx = static_cast<T>(tx[x].w_hi);
        const T top = image.at(ch, ty[y].lo, tx[x].lo) * (T{1} - wx) + image.at(ch, ty[y].lo, tx[x].hi) * wx;
        const T bottom = image.at(ch, ty[y].hi, tx[x].lo) * (T{1} - wx) + image.at(ch, ty[y].hi, tx[x].hi) * wx;
        out.at(ch, y, x) = top * (T{1} - wy) + bottom * wy;
      }
    }
  }
  return out;
}

template <typename T>
BasicImage<T> resize_bilinear_backward(const BasicImage<T>& grad_output, std::size_t in_height, std::size_t in_width) {
  const std::size_t c = grad_output.dim(0), height = grad_output.dim(1), width = grad_output.dim(2);
  const std::vector<Tap> ty = taps(in_height, height), tx = taps(in_width, width);
  BasicImage<T> g({c, in_height, in_width});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < height; ++y) {
      const T wy = static_cast<T>(ty[y].w_hi);
      for (std::size_t x = 0; x < width; ++x) {
        const T wx = static_cast<T>(tx[x].w_hi);
        const T go = grad_output.at(ch, y, x);
        g.at(ch, ty[y].lo, tx[x].lo) += go * (T{1} - wy) * (T{1} - wx);
        g.at(ch, ty[y].lo, tx[x].hi) += go * (T{1} - wy) * wx;
        g.at(ch, ty[y].hi, tx[x].lo) += go * wy * (T{1} - wx);
        g.at(ch, ty[y].hi, tx[x].hi) += go * wy * wx;
      }
    }
  }
  return g;
}

template <typename T>
BasicImage<T> downsample_long_edge(const BasicImage<T>& image, std::size_t target) {
  if (image.rank() != 3 || image.empty()) throw std::invalid_argument("downsample_long_edge: empty image");
  const auto [h, w] = long_edge_size(image.dim(1), image.dim(2), target);
  if (h == image.dim(1) && w == image.dim(2)) return image;
  return resize_bilinear(image, h, w);
}

template BasicImage<float> resize_bilinear(const BasicImage<float>&, std::size_t, std::size_t);
template BasicImage<double> resize_bilinear(const BasicImage<double>&, std::size_t, std::size_t);
template BasicImage<float> resize_bilinear_backward(const BasicImage<float>&, std::size_t, std::size_t);
template BasicImage<double> resize_bilinear_backward(const BasicImage<double>&, std::size_t, std::size_t);
template BasicImage<float> downsample_long_edge(const BasicImage<float>&, std::size_t);
template BasicImage<double> downsample_long_edge(const BasicImage<double>&, std::size_t);

// --- model ---

template <typename T>
BasicRetouchModel<T>::BasicRetouchModel(const ModelConfig& cfg) : config(cfg), predictors(cfg.predictor, cfg.operators) {
  if (cfg.operators == 0) throw std::invalid_argument("model needs at least one operator");
  if (cfg.features == 0) throw std::invalid_argument("feature dimension must be positive");
  for (std::size_t k = 0; k < cfg.operators; ++k) neurops.emplace_back(cfg.features);
}

template <typename T>
std::size_t BasicRetouchModel<T>::parameter_count() const {
  std::size_t total = predictors.parameter_count();
  for (const auto& op : neurops) total += op.parameter_count();
  return total;
}

template <typename T>
std::vector<BasicTensor<T>*> BasicRetouchModel<T>::tensors() {
  std::vector<BasicTensor<T>*> out;
  for (auto& op : neurops) {
    auto t = op.tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  auto p = predictors.tensors();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> BasicRetouchModel<T>::tensors() const {
  std::vector<const BasicTensor<T>*> out;
  for (const auto& op : neurops) {
    auto t = op.tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  auto p = predictors.tensors();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

template struct BasicRetouchModel<float>;
template struct BasicRetouchModel<double>;

RetouchModel make_random_model(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RetouchModel model(config);
  for (auto& op : model.neurops) op = make_random_neurop(config.features, rng);
  model.predictors = make_random_predictor(config.predictor, config.operators, rng);
  return model;
}

ParameterSummary summarize_parameters(const RetouchModel& model) {
  ParameterSummary s;
  s.per_operator = model.neurops.empty() ? 0 : model.neurops.front().parameter_count();
  for (const auto& op : model.neurops) s.operators += op.parameter_count();
  for (const auto& b : model.predictors.backbones) s.backbone += b.conv1.parameter_count() + b.conv2.parameter_count();
  for (const auto& h : model.predictors.heads) s.heads += h.parameter_count();
  s.total = s.operators + s.backbone + s.heads;
  return s;
}

Image retouch_step(const Image& previous, const RetouchModel& model, std::size_t k, float strength) {
  if (k >= model.operator_count()) throw std::invalid_argument("operator index out of range");
  return neurop_forward_image(previous, strength, model.neurops[k]);
}

float predict_step_strength(const Image& previous, const Image& original, const RetouchModel& model, std::size_t k) {
  const Image& source = model.config.predictor_sees_original ? original : previous;
  return predict_strength(downsample_long_edge(source, model.config.downsample_target), model.predictors, k);
}

RetouchResult retouch(const Image& image, const RetouchModel& model) {
  require_rgb(image, "retouch");
  RetouchResult result;
  Image current = image;
  for (std::size_t k = 0; k < model.operator_count(); ++k) {
    const float v = predict_step_strength(current, image, model, k);
    current = retouch_step(current, model, k, v);
    result.strengths.push_back(v);
    result.intermediates.push_back(clamp01(current));
  }
  result.output = result.intermediates.back();
  return result;
}

Image retouch_with_strengths(const Image& image, const RetouchModel& model, std::span<const float> strengths) {
  require_rgb(image, "retouch_with_strengths");
  if (strengths.size() != model.operator_count()) {
    throw std::invalid_argument("expected " + std::to_string(model.operator_count()) + " strengths, got " +
                                std::to_string(strengths.size()));
  }
  Image current = image;
  for (std::size_t k = 0; k < strengths.size(); ++k) current = retouch_step(current, model, k, strengths[k]);
  return clamp01(std::move(current));
}

}  // namespace neurop
