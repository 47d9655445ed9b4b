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

#include "neurop/tensor.hpp"

namespace neurop {

/// Returned by psnr() for identical images (MSE = 0).
inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all channels; inputs in [0,1].
double psnr(const Image& a, const Image& b);

/// SSIM of the channel-mean gray images: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, averaged over every window position that fits.
/// Images smaller than the window use one global window with unweighted
/// statistics.
double ssim(const Image& a, const Image& b);

/// Mean CIE76 distance in CIELAB (sRGB primaries, D65 white).
double delta_e(const Image& a, const Image& b);

using Lab = std::array<double, 3>;

/// sRGB in [0,1] -> L*a*b*. White (1,1,1) maps to (100, 0, 0).
Lab srgb_to_lab(const std::array<double, 3>& rgb);
/// Inverse of srgb_to_lab (not clamped).
std::array<double, 3> lab_to_srgb(const Lab& lab);

struct ImageMetrics {
  double psnr = 0;
  double ssim = 0;
  double delta_e = 0;
};

ImageMetrics compare_images(const Image& a, const Image& b);

}  // namespace neurop
