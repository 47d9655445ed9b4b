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

#include "neurop/data.hpp"

namespace neurop {

/// Smooth random scene: a two-color gradient backdrop with soft colored
/// blobs, under a random exposure, contrast and saturation.
Image synthesize_scene(std::size_t height, std::size_t width, std::mt19937_64& rng);

/// Strengths for the black-clipping -> exposure -> vibrance chain, each
/// computed from the statistics of the image it is applied to.
float synthetic_black_strength(const Image& image);
float synthetic_exposure_strength(const Image& image);
float synthetic_vibrance_strength(const Image& image);

/// Applies the three analytic operators in order, choosing each strength from
/// the current intermediate. Returns the target and the strengths used.
std::pair<Image, std::array<float, 3>> synthetic_retouch(const Image& input);

/// `count` pairs of `size` x `size` scenes with synthetic_retouch targets.
/// Ids are "synth_0000", ... .
Dataset make_synthetic_dataset(std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace neurop
