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

#include <atomic>
#include <cstdlib>
#include <string>

#include "neurop/kernels.hpp"

namespace neurop::kernels {

namespace {

// -1: no override; otherwise static_cast<int>(Isa).
std::atomic<int> g_override{-1};

Isa detect() {
#if defined(NEUROP_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa from_env(Isa detected) {
  const char* env = std::getenv("NEUROP_ISA");
  if (env == nullptr) return detected;
  const std::string value(env);
  if (value == "scalar") return Isa::kScalar;
  return detected;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = detect();
  return isa;
}

Isa active_isa() {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced >= 0) {
    const auto isa = static_cast<Isa>(forced);
    return isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2 ? Isa::kScalar : isa;
  }
  static const Isa isa = from_env(detected_isa());
  return isa;
}

void set_isa_override(std::optional<Isa> isa) {
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void neurop_map(const FoldedOperator<float>& op, Planes<const float> in, Planes<float> out, std::size_t n) {
#if defined(NEUROP_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return neurop_map_avx2(op, in, out, n);
#endif
  neurop_map_scalar(op, in, out, n);
}

void neurop_map(const FoldedOperator<double>& op, Planes<const double> in, Planes<double> out, std::size_t n) {
  neurop_map_scalar(op, in, out, n);
}

void neurop_backward(const FoldedOperator<float>& op, Planes<const float> in, Planes<const float> grad_out,
                     std::optional<Planes<float>> grad_in, OperatorGradSums<float> sums, std::size_t n) {
#if defined(NEUROP_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return neurop_backward_avx2(op, in, grad_out, grad_in, sums, n);
#endif
  neurop_backward_scalar(op, in, grad_out, grad_in, sums, n);
}

void neurop_backward(const FoldedOperator<double>& op, Planes<const double> in, Planes<const double> grad_out,
                     std::optional<Planes<double>> grad_in, OperatorGradSums<double> sums, std::size_t n) {
  neurop_backward_scalar(op, in, grad_out, grad_in, sums, n);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c, bool accumulate) {
#if defined(NEUROP_HAVE_AVX2)
  if (active_isa() == Isa::kAvx2) return gemm_avx2(m, n, k, a, b, c, accumulate);
#endif
  gemm_scalar(m, n, k, a, b, c, accumulate);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
          bool accumulate) {
  gemm_scalar(m, n, k, a, b, c, accumulate);
}

}  // namespace neurop::kernels
