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

// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <new>

#include "neurop/kernels.hpp"

namespace neurop::kernels {

namespace {

constexpr std::size_t kLanes = 8;

struct Block {
  __m256 r, g, b;
};

inline Block load_block(Planes<const float> in, std::size_t i) {
  return {_mm256_loadu_ps(in.r + i), _mm256_loadu_ps(in.g + i), _mm256_loadu_ps(in.b + i)};
}

// Two independent 8-pixel blocks per pass keep the FMA pipes busy.
inline void map_two_blocks(const FoldedOperator<float>& op, const Block& p0, const Block& p1, __m256 out0[3],
                           __m256 out1[3]) {
  const std::size_t f = op.features;
  const __m256 zero = _mm256_setzero_ps();
  __m256 a0 = _mm256_set1_ps(op.b_out[0]), a1 = _mm256_set1_ps(op.b_out[1]), a2 = _mm256_set1_ps(op.b_out[2]);
  __m256 b0 = a0, b1 = a1, b2 = a2;
  for (std::size_t j = 0; j < f; ++j) {
    const float* aj = op.a + 3 * j;
    const __m256 w0 = _mm256_set1_ps(aj[0]), w1 = _mm256_set1_ps(aj[1]), w2 = _mm256_set1_ps(aj[2]);
    const __m256 cj = _mm256_set1_ps(op.c[j]);
    __m256 h0 = _mm256_fmadd_ps(w2, p0.b, _mm256_fmadd_ps(w1, p0.g, _mm256_fmadd_ps(w0, p0.r, cj)));
    __m256 h1 = _mm256_fmadd_ps(w2, p1.b, _mm256_fmadd_ps(w1, p1.g, _mm256_fmadd_ps(w0, p1.r, cj)));
    h0 = _mm256_max_ps(h0, zero);
    h1 = _mm256_max_ps(h1, zero);
    const __m256 o0 = _mm256_set1_ps(op.w_out[j]);
    const __m256 o1 = _mm256_set1_ps(op.w_out[f + j]);
    const __m256 o2 = _mm256_set1_ps(op.w_out[2 * f + j]);
    a0 = _mm256_fmadd_ps(o0, h0, a0);
    a1 = _mm256_fmadd_ps(o1, h0, a1);
    a2 = _mm256_fmadd_ps(o2, h0, a2);
    b0 = _mm256_fmadd_ps(o0, h1, b0);
    b1 = _mm256_fmadd_ps(o1, h1, b1);
    b2 = _mm256_fmadd_ps(o2, h1, b2);
  }
  out0[0] = a0, out0[1] = a1, out0[2] = a2;
  out1[0] = b0, out1[1] = b1, out1[2] = b2;
}

}  // namespace

void neurop_map_avx2(const FoldedOperator<float>& op, Planes<const float> in, Planes<float> out, std::size_t n) {
  std::size_t i = 0;
  __m256 o0[3], o1[3];
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    map_two_blocks(op, load_block(in, i), load_block(in, i + kLanes), o0, o1);
    _mm256_storeu_ps(out.r + i, o0[0]);
    _mm256_storeu_ps(out.g + i, o0[1]);
    _mm256_storeu_ps(out.b + i, o0[2]);
    _mm256_storeu_ps(out.r + i + kLanes, o1[0]);
    _mm256_storeu_ps(out.g + i + kLanes, o1[1]);
    _mm256_storeu_ps(out.b + i + kLanes, o1[2]);
  }
  if (i == n) return;
  // Tail: zero-padded staging buffer, so every pixel sees identical arithmetic.
  alignas(32) std::array<float, 6 * kLanes> stage{};
  const std::size_t rest = n - i;
  std::copy_n(in.r + i, rest, stage.data());
  std::copy_n(in.g + i, rest, stage.data() + 2 * kLanes);
  std::copy_n(in.b + i, rest, stage.data() + 4 * kLanes);
  Planes<const float> padded{stage.data(), stage.data() + 2 * kLanes, stage.data() + 4 * kLanes};
  map_two_blocks(op, load_block(padded, 0), load_block(padded, kLanes), o0, o1);
  alignas(32) std::array<float, 6 * kLanes> result{};
  for (int c = 0; c < 3; ++c) {
    _mm256_store_ps(result.data() + 2 * kLanes * c, o0[c]);
    _mm256_store_ps(result.data() + 2 * kLanes * c + kLanes, o1[c]);
  }
  std::copy_n(result.data(), rest, out.r + i);
  std::copy_n(result.data() + 2 * kLanes, rest, out.g + i);
  std::copy_n(result.data() + 4 * kLanes, rest, out.b + i);
}

void neurop_backward_avx2(const FoldedOperator<float>& op, Planes<const float> in, Planes<const float> grad_out,
                          std::optional<Planes<float>> grad_in, OperatorGradSums<float> sums, std::size_t n) {
  const std::size_t f = op.features;
  // Per-lane partial sums, reduced once at the end: [g_p (3F) | g_one (F) | d_w_out (3F) | d_b_out (3)].
  const std::size_t slots = 7 * f + 3;
  auto* acc = static_cast<__m256*>(std::aligned_alloc(32, slots * sizeof(__m256)));
  if (acc == nullptr) throw std::bad_alloc();
  for (std::size_t s = 0; s < slots; ++s) acc[s] = _mm256_setzero_ps();
  __m256* acc_gp = acc;
  __m256* acc_one = acc_gp + 3 * f;
  __m256* acc_wo = acc_one + f;
  __m256* acc_bo = acc_wo + 3 * f;
  const __m256 zero = _mm256_setzero_ps();

  alignas(32) std::array<float, 6 * kLanes> stage{};
  alignas(32) std::array<float, 3 * kLanes> din{};

  for (std::size_t i = 0; i < n; i += kLanes) {
    const std::size_t count = std::min(kLanes, n - i);
    __m256 r, g, b, g0, g1, g2;
    if (count == kLanes) {
      r = _mm256_loadu_ps(in.r + i), g = _mm256_loadu_ps(in.g + i), b = _mm256_loadu_ps(in.b + i);
      g0 = _mm256_loadu_ps(grad_out.r + i), g1 = _mm256_loadu_ps(grad_out.g + i);
      g2 = _mm256_loadu_ps(grad_out.b + i);
    } else {
      stage.fill(0.0f);
      std::copy_n(in.r + i, count, stage.data());
      std::copy_n(in.g + i, count, stage.data() + kLanes);
      std::copy_n(in.b + i, count, stage.data() + 2 * kLanes);
      std::copy_n(grad_out.r + i, count, stage.data() + 3 * kLanes);
      std::copy_n(grad_out.g + i, count, stage.data() + 4 * kLanes);
      std::copy_n(grad_out.b + i, count, stage.data() + 5 * kLanes);
      r = _mm256_load_ps(stage.data()), g = _mm256_load_ps(stage.data() + kLanes);
      b = _mm256_load_ps(stage.data() + 2 * kLanes);
      g0 = _mm256_load_ps(stage.data() + 3 * kLanes), g1 = _mm256_load_ps(stage.data() + 4 * kLanes);
      g2 = _mm256_load_ps(stage.data() + 5 * kLanes);
    }
    __m256 dr = zero, dg = zero, db = zero;
    for (std::size_t j = 0; j < f; ++j) {
      const float* aj = op.a + 3 * j;
      const __m256 w0 = _mm256_set1_ps(aj[0]), w1 = _mm256_set1_ps(aj[1]), w2 = _mm256_set1_ps(aj[2]);
      __m256 pre = _mm256_fmadd_ps(w2, b, _mm256_fmadd_ps(w1, g, _mm256_fmadd_ps(w0, r, _mm256_set1_ps(op.c[j]))));
      const __m256 active = _mm256_cmp_ps(pre, zero, _CMP_GT_OQ);
      const __m256 h = _mm256_and_ps(pre, active);
      acc_wo[j] = _mm256_fmadd_ps(g0, h, acc_wo[j]);
      acc_wo[f + j] = _mm256_fmadd_ps(g1, h, acc_wo[f + j]);
      acc_wo[2 * f + j] = _mm256_fmadd_ps(g2, h, acc_wo[2 * f + j]);
      __m256 delta = _mm256_fmadd_ps(_mm256_set1_ps(op.w_out[2 * f + j]), g2,
                                     _mm256_fmadd_ps(_mm256_set1_ps(op.w_out[f + j]), g1,
                                                     _mm256_mul_ps(_mm256_set1_ps(op.w_out[j]), g0)));
      delta = _mm256_and_ps(delta, active);
      acc_gp[3 * j] = _mm256_fmadd_ps(delta, r, acc_gp[3 * j]);
      acc_gp[3 * j + 1] = _mm256_fmadd_ps(delta, g, acc_gp[3 * j + 1]);
      acc_gp[3 * j + 2] = _mm256_fmadd_ps(delta, b, acc_gp[3 * j + 2]);
      acc_one[j] = _mm256_add_ps(acc_one[j], delta);
      dr = _mm256_fmadd_ps(w0, delta, dr);
      dg = _mm256_fmadd_ps(w1, delta, dg);
      db = _mm256_fmadd_ps(w2, delta, db);
    }
    acc_bo[0] = _mm256_add_ps(acc_bo[0], g0);
    acc_bo[1] = _mm256_add_ps(acc_bo[1], g1);
    acc_bo[2] = _mm256_add_ps(acc_bo[2], g2);
    if (grad_in) {
      if (count == kLanes) {
        _mm256_storeu_ps(grad_in->r + i, dr);
        _mm256_storeu_ps(grad_in->g + i, dg);
        _mm256_storeu_ps(grad_in->b + i, db);
      } else {
        _mm256_store_ps(din.data(), dr);
        _mm256_store_ps(din.data() + kLanes, dg);
        _mm256_store_ps(din.data() + 2 * kLanes, db);
        std::copy_n(din.data(), count, grad_in->r + i);
        std::copy_n(din.data() + kLanes, count, grad_in->g + i);
        std::copy_n(din.data() + 2 * kLanes, count, grad_in->b + i);
      }
    }
  }

  auto reduce = [](__m256 v) {
    alignas(32) float lanes[kLanes];
    _mm256_store_ps(lanes, v);
    float s = 0.0f;
    for (float x : lanes) s += x;
    return s;
  };
  for (std::size_t j = 0; j < 3 * f; ++j) sums.g_p[j] += reduce(acc_gp[j]);
  for (std::size_t j = 0; j < f; ++j) sums.g_one[j] += reduce(acc_one[j]);
  for (std::size_t j = 0; j < 3 * f; ++j) sums.d_w_out[j] += reduce(acc_wo[j]);
  for (std::size_t c = 0; c < 3; ++c) sums.d_b_out[c] += reduce(acc_bo[c]);
  std::free(acc);
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
               bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0f);
  const std::size_t n16 = n - n % 16;
  std::size_t i = 0;
  // 4x16 register tile.
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n16; j += 16) {
      __m256 c00 = _mm256_loadu_ps(c + i * n + j), c01 = _mm256_loadu_ps(c + i * n + j + 8);
      __m256 c10 = _mm256_loadu_ps(c + (i + 1) * n + j), c11 = _mm256_loadu_ps(c + (i + 1) * n + j + 8);
      __m256 c20 = _mm256_loadu_ps(c + (i + 2) * n + j), c21 = _mm256_loadu_ps(c + (i + 2) * n + j + 8);
      __m256 c30 = _mm256_loadu_ps(c + (i + 3) * n + j), c31 = _mm256_loadu_ps(c + (i + 3) * n + j + 8);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * n + j), b1 = _mm256_loadu_ps(b + p * n + j + 8);
        __m256 av = _mm256_broadcast_ss(a + i * k + p);
        c00 = _mm256_fmadd_ps(av, b0, c00), c01 = _mm256_fmadd_ps(av, b1, c01);
        av = _mm256_broadcast_ss(a + (i + 1) * k + p);
        c10 = _mm256_fmadd_ps(av, b0, c10), c11 = _mm256_fmadd_ps(av, b1, c11);
        av = _mm256_broadcast_ss(a + (i + 2) * k + p);
        c20 = _mm256_fmadd_ps(av, b0, c20), c21 = _mm256_fmadd_ps(av, b1, c21);
        av = _mm256_broadcast_ss(a + (i + 3) * k + p);
        c30 = _mm256_fmadd_ps(av, b0, c30), c31 = _mm256_fmadd_ps(av, b1, c31);
      }
      _mm256_storeu_ps(c + i * n + j, c00), _mm256_storeu_ps(c + i * n + j + 8, c01);
      _mm256_storeu_ps(c + (i + 1) * n + j, c10), _mm256_storeu_ps(c + (i + 1) * n + j + 8, c11);
      _mm256_storeu_ps(c + (i + 2) * n + j, c20), _mm256_storeu_ps(c + (i + 2) * n + j + 8, c21);
      _mm256_storeu_ps(c + (i + 3) * n + j, c30), _mm256_storeu_ps(c + (i + 3) * n + j + 8, c31);
    }
  }
  // Leftover rows over the vectorized columns.
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n16; j += 16) {
      __m256 c0 = _mm256_loadu_ps(c + i * n + j), c1 = _mm256_loadu_ps(c + i * n + j + 8);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256 av = _mm256_broadcast_ss(a + i * k + p);
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * n + j), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * n + j + 8), c1);
      }
      _mm256_storeu_ps(c + i * n + j, c0), _mm256_storeu_ps(c + i * n + j + 8, c1);
    }
  }
  // Leftover columns for all rows.
  if (n16 < n) {
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t p = 0; p < k; ++p) {
        const float arp = a[r * k + p];
        for (std::size_t j = n16; j < n; ++j) c[r * n + j] += arp * b[p * n + j];
      }
    }
  }
}

}  // namespace neurop::kernels
