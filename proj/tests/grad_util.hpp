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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "neurop/optim.hpp"
#include "neurop/tensor.hpp"

namespace neurop::testing {

/// Finite-difference check of d loss / d params against `grads` (same
/// layout), perturbing the tensors in place and restoring them afterwards.
inline GradCheckResult check_tensor_grads(const std::vector<TensorD*>& params, const std::vector<const TensorD*>& grads,
                                          const std::function<double()>& loss, double eps = default_fd_eps<double>()) {
  std::vector<double> point, analytic;
  for (std::size_t i = 0; i < params.size(); ++i) {
    point.insert(point.end(), params[i]->values().begin(), params[i]->values().end());
    analytic.insert(analytic.end(), grads[i]->values().begin(), grads[i]->values().end());
  }
  auto write = [&](std::span<const double> x) {
    std::size_t at = 0;
    for (TensorD* t : params) {
      for (double& v : t->values()) v = x[at++];
    }
  };
  const std::function<double(std::span<const double>)> value = [&](std::span<const double> x) {
    write(x);
    return loss();
  };
  GradCheckResult r = finite_diff_check<double>(value, point, analytic, eps);
  write(point);
  return r;
}

/// Finite-difference check for piecewise-smooth losses (ReLU, max pooling,
/// L1). The numeric derivative comes from a fourth-order central stencil.
/// When lower-order estimates on the same stencil disagree with it, the
/// stencil straddles a kink and is shrunk tenfold until it fits inside one
/// smooth piece. Relative error as in finite_diff_check.
inline GradCheckResult check_piecewise_grads(const std::vector<TensorD*>& params,
                                             const std::vector<const TensorD*>& grads,
                                             const std::function<double()>& loss, double h0 = 1e-4,
                                             double h_min = 1e-7) {
  GradCheckResult result;
  std::size_t index = 0;
  const double f0 = loss();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t j = 0; j < params[t]->size(); ++j, ++index) {
      double& x = params[t]->values()[j];
      const double saved = x;
      auto at = [&](double d) {
        x = saved + d;
        const double v = loss();
        x = saved;
        return v;
      };
      double numeric = 0;
      for (double h = h0; h >= h_min * 0.999; h /= 10) {
        const double f1 = at(h), fm1 = at(-h), f2 = at(2 * h), fm2 = at(-2 * h);
        numeric = (8 * (f1 - fm1) - (f2 - fm2)) / (12 * h);
        const double forward = (-3 * f0 + 4 * f1 - f2) / (2 * h);
        const double backward = (3 * f0 - 4 * fm1 + fm2) / (2 * h);
        const double two_point = (f1 - fm1) / (2 * h);
        // on one smooth piece all four agree to O(h^2), plus rounding noise;
        // a kink at any offset inside the stencil upsets at least one of them
        const double spread = std::max({forward, backward, two_point, numeric}) -
                              std::min({forward, backward, two_point, numeric});
        if (spread <= 1e-4 * std::abs(numeric) + 1e-14 / h) break;
      }
      const double a = (*grads[t])[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (index == 0 || rel > result.max_relative_error) result = {rel, index, a, numeric};
    }
  }
  return result;
}

inline void fill_uniform(TensorD& t, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.values()) v = d(rng);
}

inline void fill_uniform(Tensor& t, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.values()) v = d(rng);
}

/// sum(r * y): a loss whose gradient with respect to y is r.
inline double project(const TensorD& y, const TensorD& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

}  // namespace neurop::testing
