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
#include <functional>
#include <span>
#include <vector>

#include "neurop/tensor.hpp"

namespace neurop {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter tensor, in the same
/// order as the parameter list handed to adam_step.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

AdamState adam_init(std::span<const Tensor* const> params, AdamConfig config = {});

/// One bias-corrected Adam update. Throws std::invalid_argument if the lists or
/// shapes disagree with each other or with the state.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Compares an analytic gradient against central differences of `value`:
/// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-8). A non-finite evaluation throws
/// std::runtime_error naming the parameter index.
template <typename T>
GradCheckResult finite_diff_check(const std::function<T(std::span<const T>)>& value, std::span<const T> point,
                                  std::span<const T> analytic, T eps);

/// Default step: 1e-3 in 32-bit, 1e-5 in the 64-bit shadow mode.
template <typename T>
constexpr T default_fd_eps() {
  return sizeof(T) == sizeof(float) ? T(1e-3) : T(1e-5);
}

}  // namespace neurop
