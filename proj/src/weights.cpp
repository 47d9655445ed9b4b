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

#include "neurop/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace neurop {

namespace {

using json = nlohmann::json;

constexpr std::string_view kMagic = "NEUROP-WEIGHTS";

void append_floats(std::string& out, const Tensor& t) {
  const std::size_t start = out.size();
  out.resize(start + t.size() * 4);
  char* dst = out.data() + start;
  for (float f : t.values()) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) *dst++ = static_cast<char>((u >> (8 * b)) & 0xffu);
  }
}

void read_floats(const char* src, Tensor& t) {
  for (float& f : t.values()) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(*src++)) << (8 * b);
    f = std::bit_cast<float>(u);
  }
}

json config_to_json(const ModelConfig& c) {
  const PredictorConfig& p = c.predictor;
  return {{"operators", c.operators},
          {"features", c.features},
          {"first_channels", p.first_channels},
          {"first_kernel", p.first_kernel},
          {"second_channels", p.second_channels},
          {"second_kernel", p.second_kernel},
          {"stride", p.stride},
          {"padding", p.padding},
          {"pooling", {{"max", p.pooling.max}, {"avg", p.pooling.avg}, {"std", p.pooling.std}}},
          {"share_backbone", p.share_backbone},
          {"downsample_target", c.downsample_target},
          {"predictor_sees_original", c.predictor_sees_original}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.operators = j.at("operators").get<std::size_t>();
  c.features = j.at("features").get<std::size_t>();
  PredictorConfig& p = c.predictor;
  p.first_channels = j.at("first_channels").get<std::size_t>();
  p.first_kernel = j.at("first_kernel").get<std::size_t>();
  p.second_channels = j.at("second_channels").get<std::size_t>();
  p.second_kernel = j.at("second_kernel").get<std::size_t>();
  p.stride = j.at("stride").get<std::size_t>();
  p.padding = j.at("padding").get<std::size_t>();
  p.pooling = {j.at("pooling").at("max").get<bool>(), j.at("pooling").at("avg").get<bool>(),
               j.at("pooling").at("std").get<bool>()};
  p.share_backbone = j.at("share_backbone").get<bool>();
  c.downsample_target = j.at("downsample_target").get<std::size_t>();
  c.predictor_sees_original = j.at("predictor_sees_original").get<bool>();
  return c;
}

}  // namespace

std::vector<std::string> tensor_names(const RetouchModel& model) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < model.neurops.size(); ++k) {
    for (const char* layer : {"encoder", "decoder_hidden", "decoder_out"}) {
      for (const char* part : {"weight", "bias"}) names.push_back("op" + std::to_string(k) + "." + layer + "." + part);
    }
  }
  for (std::size_t b = 0; b < model.predictors.backbones.size(); ++b) {
    for (const char* layer : {"conv1", "conv2"}) {
      for (const char* part : {"weight", "bias"}) {
        names.push_back("predictor.backbone" + std::to_string(b) + "." + layer + "." + part);
      }
    }
  }
  for (std::size_t h = 0; h < model.predictors.heads.size(); ++h) {
    for (const char* part : {"weight", "bias"}) names.push_back("predictor.head" + std::to_string(h) + "." + part);
  }
  return names;
}

std::string serialize_weights(const RetouchModel& model, const WeightMetadata& metadata, const AdamState* adam) {
  const auto tensors = model.tensors();
  const auto names = tensor_names(model);
  if (adam && (adam->m.size() != tensors.size() || adam->v.size() != tensors.size())) {
    throw std::invalid_argument("Adam state does not match the model's tensor list");
  }
  json manifest;
  manifest["version"] = kWeightFormatVersion;
  manifest["config"] = config_to_json(model.config);
  std::size_t floats = 0;
  json list = json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    list.push_back({{"name", names[i]}, {"shape", tensors[i]->shape()}});
    floats += tensors[i]->size();
  }
  manifest["tensors"] = list;
  manifest["provenance"] = metadata.provenance;
  manifest["seed"] = metadata.seed;
  if (adam) {
    manifest["adam"] = {{"step", adam->t},
                        {"lr", adam->config.lr},
                        {"beta1", adam->config.beta1},
                        {"beta2", adam->config.beta2},
                        {"eps", adam->config.eps}};
    floats *= 3;
  } else {
    manifest["adam"] = nullptr;
  }
  manifest["payload_bytes"] = floats * 4;

  std::string out(kMagic);
  out += '\n';
  out += manifest.dump();
  out += '\n';
  out.reserve(out.size() + floats * 4);
  for (const Tensor* t : tensors) append_floats(out, *t);
  if (adam) {
    for (const Tensor& t : adam->m) append_floats(out, t);
    for (const Tensor& t : adam->v) append_floats(out, t);
  }
  return out;
}

void save_weights(const std::filesystem::path& path, const RetouchModel& model, const WeightMetadata& metadata,
                  const AdamState* adam) {
  const std::string bytes = serialize_weights(model, metadata, adam);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedWeights deserialize_weights(const std::string& bytes) {
  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string::npos || std::string_view(bytes).substr(0, magic_end) != kMagic) {
    throw std::runtime_error("not a neurop weight file (missing NEUROP-WEIGHTS header)");
  }
  const std::size_t manifest_end = bytes.find('\n', magic_end + 1);
  if (manifest_end == std::string::npos) throw std::runtime_error("weight file truncated inside the manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(magic_end + 1),
                           bytes.begin() + static_cast<std::ptrdiff_t>(manifest_end));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed weight manifest: ") + e.what());
  }

  LoadedWeights loaded;
  try {
    const int version = manifest.at("version").get<int>();
    if (version != kWeightFormatVersion) {
      throw std::runtime_error("unsupported weight format version " + std::to_string(version) + " (expected " +
                               std::to_string(kWeightFormatVersion) + ")");
    }
    loaded.model = RetouchModel(config_from_json(manifest.at("config")));
    loaded.metadata.provenance = manifest.value("provenance", "");
    loaded.metadata.seed = manifest.value("seed", std::uint64_t{0});

    const auto tensors = loaded.model.tensors();
    const auto names = tensor_names(loaded.model);
    const json& list = manifest.at("tensors");
    if (list.size() != tensors.size()) {
      throw std::runtime_error("manifest lists " + std::to_string(list.size()) + " tensors but the configuration needs " +
                               std::to_string(tensors.size()));
    }
    std::size_t floats = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto shape = list[i].at("shape").get<Shape>();
      if (list[i].at("name").get<std::string>() != names[i] || shape != tensors[i]->shape()) {
        throw std::runtime_error("shape mismatch for tensor " + names[i] + ": file has " +
                                 list[i].at("name").get<std::string>() + " " + shape_to_string(shape) +
                                 ", configuration implies " + shape_to_string(tensors[i]->shape()));
      }
      floats += tensors[i]->size();
    }
    const bool has_adam = !manifest.at("adam").is_null();
    const std::size_t expected = floats * 4 * (has_adam ? 3 : 1);
    if (manifest.at("payload_bytes").get<std::size_t>() != expected) {
      throw std::runtime_error("manifest payload_bytes disagrees with the tensor shapes");
    }
    const std::size_t actual = bytes.size() - manifest_end - 1;
    if (actual != expected) {
      throw std::runtime_error("weight payload has " + std::to_string(actual) + " bytes, expected " +
                               std::to_string(expected));
    }
    const char* src = bytes.data() + manifest_end + 1;
    for (Tensor* t : tensors) {
      read_floats(src, *t);
      src += t->size() * 4;
    }
    if (has_adam) {
      const json& a = manifest.at("adam");
      AdamState state;
      state.t = a.at("step").get<std::uint64_t>();
      state.config = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                      a.at("eps").get<double>()};
      for (auto* moments : {&state.m, &state.v}) {
        for (const Tensor* t : tensors) {
          Tensor m(t->shape());
          read_floats(src, m);
          src += m.size() * 4;
          moments->push_back(std::move(m));
        }
      }
      loaded.adam = std::move(state);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed weight manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid model configuration in weight file: ") + e.what());
  }
  return loaded;
}

LoadedWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_weights(buf.str());
}

}  // namespace neurop
