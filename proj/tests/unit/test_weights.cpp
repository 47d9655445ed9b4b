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

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "doctest.h"
#include "neurop/weights.hpp"

using namespace neurop;

namespace {

bool same_model(const RetouchModel& a, const RetouchModel& b) {
  const auto ta = a.tensors(), tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("neurop-test-" + std::to_string(::getpid()) + "-" + name);
}

// The JSON manifest is the second line.
std::string manifest_of(const std::string& bytes) {
  const std::size_t a = bytes.find('\n') + 1;
  return bytes.substr(a, bytes.find('\n', a) - a);
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const std::size_t at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("weights round trip bit-exactly through a string and a file") {
  const RetouchModel model = make_random_model({}, 1);
  const std::string bytes = serialize_weights(model, {"desk init-ops", 42});
  CHECK(bytes.rfind("NEUROP-WEIGHTS\n", 0) == 0);
  const LoadedWeights back = deserialize_weights(bytes);
  CHECK(same_model(back.model, model));
  CHECK(back.metadata.provenance == "desk init-ops");
  CHECK(back.metadata.seed == 42);
  CHECK(!back.adam);
  CHECK(serialize_weights(back.model, back.metadata) == bytes);

  const auto path = temp_file("model.weights");
  save_weights(path, model, {"file", 7});
  const LoadedWeights from_file = load_weights(path);
  CHECK(same_model(from_file.model, model));
  CHECK(from_file.metadata.seed == 7);
  std::filesystem::remove(path);
}

TEST_CASE("non-default configurations round trip") {
  ModelConfig cfg;
  cfg.operators = 4;
  cfg.features = 16;
  cfg.predictor.share_backbone = false;
  cfg.predictor.pooling = {true, true, false};
  cfg.predictor.first_channels = 8;
  const RetouchModel model = make_random_model(cfg, 2);
  const LoadedWeights back = deserialize_weights(serialize_weights(model));
  CHECK(same_model(back.model, model));
  CHECK(back.model.config.operators == 4);
  CHECK(back.model.config.features == 16);
  CHECK(!back.model.config.predictor.share_backbone);
  CHECK(back.model.config.predictor.pooling == PoolingSet{true, true, false});
}

TEST_CASE("Adam state is stored after the model") {
  const RetouchModel model = make_random_model({}, 3);
  AdamState adam = adam_init(model.tensors(), AdamConfig{});
  adam.t = 17;
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    for (std::size_t j = 0; j < adam.m[i].size(); ++j) {
      adam.m[i][j] = 0.001f * float(j % 13);
      adam.v[i][j] = 1e-6f * float(j % 7);
    }
  }
  const std::string with = serialize_weights(model, {}, &adam);
  CHECK(with.size() == serialize_weights(model).size() + 2 * 4 * model.parameter_count() +
                           (manifest_of(with).size() - manifest_of(serialize_weights(model)).size()));
  const LoadedWeights back = deserialize_weights(with);
  REQUIRE(back.adam);
  CHECK(back.adam->t == 17);
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    CHECK(back.adam->m[i] == adam.m[i]);
    CHECK(back.adam->v[i] == adam.v[i]);
  }
}

TEST_CASE("manifest") {
  const RetouchModel model = make_random_model({}, 4);
  const std::string m = manifest_of(serialize_weights(model));
  CHECK(m.find("\"version\":1") != std::string::npos);
  CHECK(m.find("\"operators\":3") != std::string::npos);
  CHECK(m.find("\"features\":64") != std::string::npos);
  CHECK(m.find("op0.encoder.weight") != std::string::npos);

  const auto names = tensor_names(model);
  REQUIRE(names.size() == model.tensors().size());
  CHECK(names.front() == "op0.encoder.weight");
  CHECK(names[18] == "predictor.backbone0.conv1.weight");
  CHECK(names.back() == "predictor.head2.bias");
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
}

TEST_CASE("corrupt files are rejected with a reason") {
  const RetouchModel model = make_random_model({}, 5);
  const std::string bytes = serialize_weights(model);
  const std::size_t payload = 4 * model.parameter_count();

  CHECK_THROWS_WITH_AS(deserialize_weights("NOT-WEIGHTS\n{}\n"), doctest::Contains("NEUROP-WEIGHTS"), std::runtime_error);
  CHECK_THROWS_AS(deserialize_weights(""), std::runtime_error);

  const std::string truncated = bytes.substr(0, bytes.size() - 10);
  CHECK_THROWS_WITH_AS(deserialize_weights(truncated), doctest::Contains(std::to_string(payload).c_str()), std::runtime_error);
  CHECK_THROWS_WITH_AS(deserialize_weights(truncated), doctest::Contains(std::to_string(payload - 10).c_str()),
                       std::runtime_error);
  CHECK_THROWS_AS(deserialize_weights(bytes + "xx"), std::runtime_error);

  CHECK_THROWS_WITH_AS(deserialize_weights(replace_once(bytes, "\"version\":1", "\"version\":9")),
                       doctest::Contains("version"), std::runtime_error);
  CHECK_THROWS_AS(deserialize_weights(replace_once(bytes, "\"features\":64", "\"features\":32")), std::runtime_error);
  CHECK_THROWS_AS(deserialize_weights(replace_once(bytes, "{", "[")), std::runtime_error);
  CHECK_THROWS_AS(load_weights("/nonexistent/model.weights"), std::runtime_error);
}
