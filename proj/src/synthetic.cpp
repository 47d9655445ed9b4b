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

#include "neurop/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "neurop/color_ops.hpp"

namespace neurop {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LumaStats {
  double mean = 0, std = 0, saturation = 0;
};

LumaStats luma_stats(const Image& img) {
  const std::size_t n = img.dim(1) * img.dim(2);
  double sum = 0, sq = 0, sat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img[i], g = img[n + i], b = img[2 * n + i];
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    sum += y, sq += y * y;
    sat += std::max({r, g, b}) - std::min({r, g, b});
  }
  LumaStats s;
  s.mean = sum / static_cast<double>(n);
  s.std = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - s.mean * s.mean));
  s.saturation = sat / static_cast<double>(n);
  return s;
}

}  // namespace

Image synthesize_scene(std::size_t height, std::size_t width, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto color = [&] { return std::array<double, 3>{unit(rng), unit(rng), unit(rng)}; };
  const auto top = color(), bottom = color();
  const double tilt = unit(rng) * 2.0 - 1.0;

  struct Blob {
    double cy, cx, inv_two_sigma2, opacity;
    std::array<double, 3> rgb;
  };
  std::vector<Blob> blobs(3 + rng() % 5);
  for (Blob& b : blobs) {
    const double sigma = (0.05 + 0.25 * unit(rng)) * static_cast<double>(std::max(height, width));
    b = {unit(rng) * height, unit(rng) * width, 1.0 / (2.0 * sigma * sigma), 0.5 + 0.5 * unit(rng), color()};
  }
  const double wave_fy = (1 + rng() % 4) * 2 * kPi / height, wave_fx = (1 + rng() % 4) * 2 * kPi / width;
  const double wave_amp = 0.03 * unit(rng);

  const double saturation = 0.3 + unit(rng);
  const double gamma = 0.7 + 0.9 * unit(rng);
  const double gain = std::exp2(-1.6 + 2.0 * unit(rng));

  Image img({3, height, width});
  const std::size_t n = height * width;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double t = std::clamp(static_cast<double>(y) / height + 0.3 * tilt * (static_cast<double>(x) / width - 0.5), 0.0, 1.0);
      std::array<double, 3> p;
      for (int c = 0; c < 3; ++c) p[c] = top[c] * (1 - t) + bottom[c] * t;
      for (const Blob& b : blobs) {
        const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
        const double a = b.opacity * std::exp(-d2 * b.inv_two_sigma2);
        for (int c = 0; c < 3; ++c) p[c] = p[c] * (1 - a) + b.rgb[c] * a;
      }
      const double wave = wave_amp * std::sin(wave_fy * y) * std::cos(wave_fx * x);
      const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      for (int c = 0; c < 3; ++c) {
        double v = luma + saturation * (p[c] - luma) + wave;
        v = std::pow(std::clamp(v, 0.0, 1.0), gamma) * gain;
        img[c * n + y * width + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

float synthetic_black_strength(const Image& image) {
  return static_cast<float>(0.8 * std::tanh(3.0 * (0.15 - luma_stats(image).std)));
}

float synthetic_exposure_strength(const Image& image) {
  return static_cast<float>(std::tanh(3.0 * (0.42 - luma_stats(image).mean)));
}

float synthetic_vibrance_strength(const Image& image) {
  return static_cast<float>(std::tanh(3.0 * (0.22 - luma_stats(image).saturation)));
}

std::pair<Image, std::array<float, 3>> synthetic_retouch(const Image& input) {
  std::array<float, 3> v{};
  v[0] = synthetic_black_strength(input);
  Image current = standard_op_apply(StandardOpKind::kBlackClipping, input, v[0]);
  v[1] = synthetic_exposure_strength(current);
  current = standard_op_apply(StandardOpKind::kExposure, current, v[1]);
  v[2] = synthetic_vibrance_strength(current);
  current = standard_op_apply(StandardOpKind::kVibrance, current, v[2]);
  return {std::move(current), v};
}

Dataset make_synthetic_dataset(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < count; ++i) {
    Image input = synthesize_scene(size, size, rng);
    auto [target, strengths] = synthetic_retouch(input);
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04zu", i);
    ds.pairs.push_back({id, std::move(input), std::move(target), std::nullopt});
  }
  return ds;
}

}  // namespace neurop
