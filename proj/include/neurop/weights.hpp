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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neurop/optim.hpp"
#include "neurop/pipeline.hpp"

namespace neurop {

inline constexpr int kWeightFormatVersion = 1;

struct WeightMetadata {
  std::string provenance;  // free text, e.g. "desk init-ops"
  std::uint64_t seed = 0;
};

struct LoadedWeights {
  RetouchModel model;
  WeightMetadata metadata;
  std::optional<AdamState> adam;
};

/// File layout: the line "NEUROP-WEIGHTS", one line of JSON manifest
/// (version, K, F, C1, predictor geometry, tensor names and shapes, payload
/// size, metadata, Adam step), then the payload: every model tensor in
/// RetouchModel::tensors() order as little-endian float32, followed by the
/// Adam first and second moments when present.
void save_weights(const std::filesystem::path& path, const RetouchModel& model, const WeightMetadata& metadata = {},
                  const AdamState* adam = nullptr);
std::string serialize_weights(const RetouchModel& model, const WeightMetadata& metadata = {},
                              const AdamState* adam = nullptr);

/// Throws std::runtime_error on a bad magic line, an unsupported version, a
/// malformed manifest, a payload of the wrong length (naming expected and
/// actual byte counts) or a tensor shape that disagrees with the declared
/// configuration.
LoadedWeights load_weights(const std::filesystem::path& path);
LoadedWeights deserialize_weights(const std::string& bytes);

/// Names in RetouchModel::tensors() order, e.g. "op0.encoder.weight",
/// "predictor.backbone0.conv1.bias", "predictor.head2.weight".
std::vector<std::string> tensor_names(const RetouchModel& model);

}  // namespace neurop
