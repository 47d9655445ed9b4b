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

#include <algorithm>
#include <cmath>
#include <vector>

#include "neurop/kernels.hpp"

namespace neurop::kernels {

// Operation order here is mirrored lane-for-lane by the AVX2 forward kernel.
template <typename T>
void neurop_map_scalar(const FoldedOperator<T>& op, Planes<const T> in, Planes<T> out, std::size_t n) {
  const std::size_t f = op.features;
  for (std::size_t i = 0; i < n; ++i) {
    const T r = in.r[i], g = in.g[i], b = in.b[i];
    T o0 = op.b_out[0], o1 = op.b_out[1], o2 = op.b_out[2];
    for (std::size_t j = 0; j < f; ++j) {
      const T* aj = op.a + 3 * j;
      T pre = std::fma(aj[2], b, std::fma(aj[1], g, std::fma(aj[0], r, op.c[j])));
      T h = pre > T{0} ? pre : T{0};
      o0 = std::fma(op.w_out[j], h, o0);
      o1 = std::fma(op.w_out[f + j], h, o1);
      o2 = std::fma(op.w_out[2 * f + j], h, o2);
    }
    out.r[i] = o0;
    out.g[i] = o1;
    out.b[i] = o2;
  }
}

template <typename T>
void neurop_backward_scalar(const FoldedOperator<T>& op, Planes<const T> in, Planes<const T> grad_out,
                            std::optional<Planes<T>> grad_in, OperatorGradSums<T> sums, std::size_t n) {
  const std::size_t f = op.features;
  for (std::size_t i = 0; i < n; ++i) {
    const T r = in.r[i], g = in.g[i], b = in.b[i];
    const T g0 = grad_out.r[i], g1 = grad_out.g[i], g2 = grad_out.b[i];
    T dr = 0, dg = 0, db = 0;
    for (std::size_t j = 0; j < f; ++j) {
      const T* aj = op.a + 3 * j;
      T pre = std::fma(aj[2], b, std::fma(aj[1], g, std::fma(aj[0], r, op.c[j])));
      if (!(pre > T{0})) continue;
      sums.d_w_out[j] += g0 * pre;
      sums.d_w_out[f + j] += g1 * pre;
      sums.d_w_out[2 * f + j] += g2 * pre;
      T delta = std::fma(op.w_out[2 * f + j], g2, std::fma(op.w_out[f + j], g1, op.w_out[j] * g0));
      sums.g_p[3 * j] += delta * r;
      sums.g_p[3 * j + 1] += delta * g;
      sums.g_p[3 * j + 2] += delta * b;
      sums.g_one[j] += delta;
      dr += aj[0] * delta;
      dg += aj[1] * delta;
      db += aj[2] * delta;
    }
    sums.d_b_out[0] += g0;
    sums.d_b_out[1] += g1;
    sums.d_b_out[2] += g2;
    if (grad_in) {
      grad_in->r[i] = dr;
      grad_in->g[i] = dg;
      grad_in->b[i] = db;
    }
  }
}

template <typename T>
void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, T{0});
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template void neurop_map_scalar<float>(const FoldedOperator<float>&, Planes<const float>, Planes<float>,
                                       std::size_t);
template void neurop_map_scalar<double>(const FoldedOperator<double>&, Planes<const double>, Planes<double>,
                                        std::size_t);
template void neurop_backward_scalar<float>(const FoldedOperator<float>&, Planes<const float>, Planes<const float>,
                                            std::optional<Planes<float>>, OperatorGradSums<float>, std::size_t);
template void neurop_backward_scalar<double>(const FoldedOperator<double>&, Planes<const double>,
                                             Planes<const double>, std::optional<Planes<double>>,
                                             OperatorGradSums<double>, std::size_t);
template void gemm_scalar<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm_scalar<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*,
                                  bool);

}  // namespace neurop::kernels
