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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neurop/tensor.hpp"

namespace neurop {

struct ImagePair {
  std::string id;
  Image input;                 // [3,H,W] in [0,1]
  Image target;                // same shape as input
  std::optional<Tensor> mask;  // [H,W], 1 inside the human region
};

enum class Split { kTrain, kTest };

struct Dataset {
  std::vector<ImagePair> pairs;
  Split split = Split::kTrain;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Throws std::invalid_argument when the pair's shapes disagree.
void validate_pair(const ImagePair& pair);

// --- image files ---

/// Reads an 8- or 16-bit PNG or TIFF (by extension) into [0,1] planar RGB.
/// Gray images are replicated to 3 channels; alpha is dropped.
Image read_image(const std::filesystem::path& path);
/// Single-channel read for masks; values in [0,1].
Tensor read_mask(const std::filesystem::path& path);

/// Writes a clamped 8-bit PNG, or a 16-bit TIFF for .tif/.tiff paths.
void write_image(const std::filesystem::path& path, const Image& image);

/// In-memory 8-bit PNG encoding (values clamped, rounded to nearest).
std::vector<unsigned char> encode_png(const Image& image);
Image decode_png(const std::vector<unsigned char>& bytes);

/// Layout: root/input/<stem>.{png,tif,tiff}, root/target/<stem>.*, optional
/// root/masks/<stem>.*. Pairs are ordered by stem. An empty or missing input
/// directory yields an empty dataset; stems present on only one side are an
/// error naming the orphans.
Dataset load_pair_dataset(const std::filesystem::path& root, Split split = Split::kTrain);

/// Writes `dataset` in the layout load_pair_dataset reads: 16-bit TIFF
/// images, PNG masks.
void save_pair_dataset(const std::filesystem::path& root, const Dataset& dataset);

}  // namespace neurop
