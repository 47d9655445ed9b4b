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

#include "neurop/session.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace neurop {

const Image& RenderCache::render(const RetouchModel& model, std::span<const float> strengths) {
  const std::size_t k_count = model.operator_count();
  if (strengths.size() != k_count) throw std::invalid_argument("strength count does not match the model");
  if (steps_.size() != k_count) {
    steps_.assign(k_count, Image{});
    strengths_.assign(k_count, 0.0f);
    valid_ = 0;
  }
  std::size_t first_changed = k_count;
  for (std::size_t k = 0; k < k_count; ++k) {
    // Bitwise comparison: -0.0 and 0.0 render identically but need not be cached as equal.
    if (std::bit_cast<std::uint32_t>(strengths[k]) != std::bit_cast<std::uint32_t>(strengths_[k])) {
      first_changed = k;
      break;
    }
  }
  valid_ = std::min(valid_, first_changed);
  counters_.cache_hits += valid_;
  for (std::size_t k = valid_; k < k_count; ++k) {
    steps_[k] = retouch_step(k == 0 ? base_ : steps_[k - 1], model, k, strengths[k]);
    strengths_[k] = strengths[k];
    ++counters_.operator_applications;
  }
  valid_ = k_count;
  return steps_.back();
}

Session::Session(std::string id, Image original, std::shared_ptr<const RetouchModel> model, std::size_t preview_edge)
    : id_(std::move(id)),
      model_(std::move(model)),
      original_height_(original.dim(1)),
      original_width_(original.dim(2)),
      preview_(downsample_long_edge(original, preview_edge)),
      full_(Image{}) {
  require_rgb(original, "session image");
  predicted_ = retouch(original, *model_).strengths;
  strengths_ = predicted_;
  full_ = RenderCache(std::move(original));
}

const std::vector<float>& Session::set_strengths(std::span<const double> values) {
  if (values.size() != model_->operator_count()) {
    throw std::invalid_argument("strengths: expected " + std::to_string(model_->operator_count()) + " values, got " +
                                std::to_string(values.size()));
  }
  std::vector<float> next(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw std::invalid_argument("strengths[" + std::to_string(k) + "]: value is not a finite number");
    }
    next[k] = static_cast<float>(std::clamp(values[k], -double{kMaxSliderStrength}, double{kMaxSliderStrength}));
  }
  strengths_ = std::move(next);
  return strengths_;
}

Image Session::preview() { return clamp01(preview_.render(*model_, strengths_)); }

std::vector<Image> Session::preview_intermediates() {
  preview_.render(*model_, strengths_);
  std::vector<Image> out;
  for (const Image& step : preview_.steps()) out.push_back(clamp01(step));
  return out;
}

Image Session::full() { return clamp01(full_.render(*model_, strengths_)); }

}  // namespace neurop
