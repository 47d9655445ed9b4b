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

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "neurop/pipeline.hpp"

namespace neurop {

/// Slider range accepted by sessions; wider than the predictors' (-1, 1).
inline constexpr float kMaxSliderStrength = 2.0f;

struct RenderCounters {
  std::uint64_t operator_applications = 0;  // neural operator runs
  std::uint64_t cache_hits = 0;             // cached intermediates reused
};

/// Unclamped intermediates I_1..I_K of one base image for the strengths last
/// rendered. A new strength vector invalidates everything from the lowest
/// changed index on.
class RenderCache {
 public:
  explicit RenderCache(Image base) : base_(std::move(base)) {}

  /// Brings the cache up to date and returns the unclamped I_K.
  const Image& render(const RetouchModel& model, std::span<const float> strengths);
  /// Unclamped I_1..I_K as of the last render.
  const std::vector<Image>& steps() const { return steps_; }
  const Image& base() const { return base_; }
  const RenderCounters& counters() const { return counters_; }

 private:
  Image base_;
  std::vector<Image> steps_;
  std::vector<float> strengths_;
  std::size_t valid_ = 0;
  RenderCounters counters_;
};

/// State behind one interactive editing session: the uploaded image, its
/// predicted strengths, the current slider values and render caches at
/// preview and full resolution. Callers serialize access through mutex().
class Session {
 public:
  Session(std::string id, Image original, std::shared_ptr<const RetouchModel> model, std::size_t preview_edge = 512);

  const std::string& id() const { return id_; }
  std::mutex& mutex() { return mutex_; }
  std::size_t height() const { return original_height_; }
  std::size_t width() const { return original_width_; }

  const std::vector<float>& predicted_strengths() const { return predicted_; }
  const std::vector<float>& strengths() const { return strengths_; }

  /// Clamps each value to [-2, 2] and stores it. Throws std::invalid_argument
  /// naming the offending entry on a wrong count or a non-finite value.
  const std::vector<float>& set_strengths(std::span<const double> values);

  /// Clamped render of the preview-sized original (long edge <= preview_edge).
  Image preview();
  /// Clamped preview-sized I_1..I_K.
  std::vector<Image> preview_intermediates();
  /// Clamped full-resolution render; equals retouch_with_strengths().
  Image full();

  const RenderCounters& preview_counters() const { return preview_.counters(); }
  const RenderCounters& full_counters() const { return full_.counters(); }

 private:
  std::string id_;
  std::shared_ptr<const RetouchModel> model_;
  std::size_t original_height_, original_width_;
  std::vector<float> predicted_;
  std::vector<float> strengths_;
  RenderCache preview_;
  RenderCache full_;
  std::mutex mutex_;
};

}  // namespace neurop
