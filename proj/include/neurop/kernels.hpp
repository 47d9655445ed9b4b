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

// Data-parallel inner loops. Each kernel has a portable scalar reference
// (templated, also used by the 64-bit gradient-check path) and, on x86-64, an
// AVX2+FMA variant chosen at runtime.

#include <cstddef>
#include <optional>
#include <string_view>

namespace neurop::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// Best ISA supported by this CPU and build.
Isa detected_isa();

/// ISA used by the dispatchers. Honors NEUROP_ISA=scalar|avx2 and any
/// override installed with set_isa_override.
Isa active_isa();

/// Test hook; std::nullopt restores detection. Requests for an unsupported
/// ISA fall back to scalar.
void set_isa_override(std::optional<Isa> isa);

/// Three planes of `n` pixels each.
template <typename T>
struct Planes {
  T* r;
  T* g;
  T* b;
};

/// A neural color operator with its encoder and strength folded into the
/// first decoder layer:  a = A p + c,  h = relu(a),  y = W_out h + b_out.
template <typename T>
struct FoldedOperator {
  std::size_t features = 0;
  const T* a = nullptr;      // [F, 3]
  const T* c = nullptr;      // [F]
  const T* w_out = nullptr;  // [3, F]
  const T* b_out = nullptr;  // [3]
};

/// Gradient sums over a pixel batch. `g_p` = sum delta p^T, `g_one` = sum delta
/// (delta is the gradient at the hidden pre-activation).
template <typename T>
struct OperatorGradSums {
  T* g_p;      // [F, 3]
  T* g_one;    // [F]
  T* d_w_out;  // [3, F]
  T* d_b_out;  // [3]
};

// --- scalar reference (float and double) ---

template <typename T>
void neurop_map_scalar(const FoldedOperator<T>& op, Planes<const T> in, Planes<T> out, std::size_t n);

template <typename T>
void neurop_backward_scalar(const FoldedOperator<T>& op, Planes<const T> in, Planes<const T> grad_out,
                            std::optional<Planes<T>> grad_in, OperatorGradSums<T> sums, std::size_t n);

/// C[M,N] = A[M,K] * B[K,N] (+ C if accumulate), all row-major and dense.
template <typename T>
void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

// --- AVX2 (only callable when detected_isa() == kAvx2) ---

void neurop_map_avx2(const FoldedOperator<float>& op, Planes<const float> in, Planes<float> out, std::size_t n);
void neurop_backward_avx2(const FoldedOperator<float>& op, Planes<const float> in, Planes<const float> grad_out,
                          std::optional<Planes<float>> grad_in, OperatorGradSums<float> sums, std::size_t n);
void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
               bool accumulate);

// --- dispatchers ---

/// Forward map. Every pixel goes through the same per-lane arithmetic, so a
/// pixel's output does not depend on its position or on `n`, and the scalar
/// and AVX2 variants agree bit for bit.
void neurop_map(const FoldedOperator<float>& op, Planes<const float> in, Planes<float> out, std::size_t n);
void neurop_map(const FoldedOperator<double>& op, Planes<const double> in, Planes<double> out, std::size_t n);

/// Backward pass; sums are accumulated into (not overwritten). grad_in, if
/// given, is overwritten.
void neurop_backward(const FoldedOperator<float>& op, Planes<const float> in, Planes<const float> grad_out,
                     std::optional<Planes<float>> grad_in, OperatorGradSums<float> sums, std::size_t n);
void neurop_backward(const FoldedOperator<double>& op, Planes<const double> in, Planes<const double> grad_out,
                     std::optional<Planes<double>> grad_in, OperatorGradSums<double> sums, std::size_t n);

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c, bool accumulate);
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
          bool accumulate);

}  // namespace neurop::kernels
