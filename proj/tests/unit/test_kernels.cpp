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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "neurop/kernels.hpp"

using namespace neurop::kernels;

namespace {

struct OpData {
  std::size_t f;
  std::vector<float> a, c, w, b;
  explicit OpData(std::size_t features, std::mt19937_64& rng) : f(features), a(3 * f), c(f), w(3 * f), b(3) {
    std::uniform_real_distribution<float> d(-1, 1);
    for (auto* v : {&a, &c, &w, &b}) {
      for (float& x : *v) x = d(rng);
    }
  }
  FoldedOperator<float> view() const { return {f, a.data(), c.data(), w.data(), b.data()}; }
};

struct PlaneSet {
  std::vector<float> r, g, b;
  explicit PlaneSet(std::size_t n) : r(n), g(n), b(n) {}
  Planes<float> mut() { return {r.data(), g.data(), b.data()}; }
  Planes<const float> in() const { return {r.data(), g.data(), b.data()}; }
  void randomize(std::mt19937_64& rng, float lo = 0, float hi = 1) {
    std::uniform_real_distribution<float> d(lo, hi);
    for (auto* v : {&r, &g, &b}) {
      for (float& x : *v) x = d(rng);
    }
  }
};

struct IsaGuard {
  explicit IsaGuard(Isa isa) { set_isa_override(isa); }
  ~IsaGuard() { set_isa_override(std::nullopt); }
};

bool have_avx2() { return detected_isa() == Isa::kAvx2; }

void close(const std::vector<float>& x, const std::vector<float>& y, float tol) {
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(x[i] - y[i]) <= tol * std::max(1.0f, std::abs(y[i])));
  }
}

}  // namespace

TEST_CASE("isa names and override") {
  CHECK(isa_name(Isa::kScalar) == "scalar");
  CHECK(isa_name(Isa::kAvx2) == "avx2");
  {
    IsaGuard g(Isa::kScalar);
    CHECK(active_isa() == Isa::kScalar);
  }
  IsaGuard g(Isa::kAvx2);
  CHECK(active_isa() == (have_avx2() ? Isa::kAvx2 : Isa::kScalar));
}

TEST_CASE("forward map: avx2 is bit-identical to scalar, every tail length") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(3);
  for (std::size_t f : {1u, 4u, 7u, 64u}) {
    const OpData op(f, rng);
    for (std::size_t n : {1u, 2u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 1000u, 1027u}) {
      PlaneSet in(n), s(n), v(n);
      in.randomize(rng, -0.5f, 1.5f);
      {
        IsaGuard g(Isa::kScalar);
        neurop_map(op.view(), in.in(), s.mut(), n);
      }
      {
        IsaGuard g(Isa::kAvx2);
        neurop_map(op.view(), in.in(), v.mut(), n);
      }
      CHECK(s.r == v.r);
      CHECK(s.g == v.g);
      CHECK(s.b == v.b);
    }
  }
}

TEST_CASE("forward map: a pixel's output does not depend on its position") {
  std::mt19937_64 rng(4);
  const OpData op(64, rng);
  PlaneSet in(37), out(37), one_out(1);
  in.randomize(rng);
  neurop_map(op.view(), in.in(), out.mut(), 37);
  for (std::size_t i = 0; i < 37; ++i) {
    PlaneSet one(1);
    one.r[0] = in.r[i], one.g[0] = in.g[i], one.b[0] = in.b[i];
    neurop_map(op.view(), one.in(), one_out.mut(), 1);
    CHECK(one_out.r[0] == out.r[i]);
    CHECK(one_out.g[0] == out.g[i]);
    CHECK(one_out.b[0] == out.b[i]);
  }
}

TEST_CASE("forward map: scalar kernel matches a naive pixel loop") {
  std::mt19937_64 rng(5);
  const OpData op(16, rng);
  const std::size_t n = 50;
  PlaneSet in(n), out(n);
  in.randomize(rng);
  neurop_map_scalar(op.view(), in.in(), out.mut(), n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p[3] = {in.r[i], in.g[i], in.b[i]};
    double y[3] = {op.b[0], op.b[1], op.b[2]};
    for (std::size_t j = 0; j < op.f; ++j) {
      double a = op.c[j];
      for (int ch = 0; ch < 3; ++ch) a += double(op.a[j * 3 + ch]) * p[ch];
      const double h = a > 0 ? a : 0;
      for (int ch = 0; ch < 3; ++ch) y[ch] += double(op.w[ch * op.f + j]) * h;
    }
    CHECK(out.r[i] == doctest::Approx(y[0]).epsilon(1e-5));
    CHECK(out.g[i] == doctest::Approx(y[1]).epsilon(1e-5));
    CHECK(out.b[i] == doctest::Approx(y[2]).epsilon(1e-5));
  }
}

TEST_CASE("backward: avx2 matches scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(6);
  for (std::size_t f : {3u, 64u}) {
    const OpData op(f, rng);
    for (std::size_t n : {1u, 5u, 8u, 13u, 257u}) {
      PlaneSet in(n), go(n), gi_s(n), gi_v(n);
      in.randomize(rng);
      go.randomize(rng, -1, 1);
      std::vector<float> gp_s(3 * f), g1_s(f), dw_s(3 * f), db_s(3);
      std::vector<float> gp_v(3 * f), g1_v(f), dw_v(3 * f), db_v(3);
      {
        IsaGuard g(Isa::kScalar);
        neurop_backward(op.view(), in.in(), go.in(), gi_s.mut(), {gp_s.data(), g1_s.data(), dw_s.data(), db_s.data()},
                        n);
      }
      {
        IsaGuard g(Isa::kAvx2);
        neurop_backward(op.view(), in.in(), go.in(), gi_v.mut(), {gp_v.data(), g1_v.data(), dw_v.data(), db_v.data()},
                        n);
      }
      close(gi_v.r, gi_s.r, 1e-5f);
      close(gi_v.g, gi_s.g, 1e-5f);
      close(gi_v.b, gi_s.b, 1e-5f);
      close(gp_v, gp_s, 1e-4f);
      close(g1_v, g1_s, 1e-4f);
      close(dw_v, dw_s, 1e-4f);
      close(db_v, db_s, 1e-4f);
    }
  }
}

TEST_CASE("backward accumulates into the sums") {
  std::mt19937_64 rng(7);
  const OpData op(8, rng);
  PlaneSet in(20), go(20);
  in.randomize(rng);
  go.randomize(rng, -1, 1);
  std::vector<float> gp(24), g1(8), dw(24), db(3);
  neurop_backward(op.view(), in.in(), go.in(), std::nullopt, {gp.data(), g1.data(), dw.data(), db.data()}, 20);
  const std::vector<float> once = db;
  neurop_backward(op.view(), in.in(), go.in(), std::nullopt, {gp.data(), g1.data(), dw.data(), db.data()}, 20);
  for (int c = 0; c < 3; ++c) CHECK(db[c] == doctest::Approx(2 * once[c]).epsilon(1e-5));
}

TEST_CASE("gemm: avx2 matches scalar, with and without accumulation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> d(-1, 1);
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 7, 5}, {32, 63, 98}, {32, 3969, 147}, {5, 9, 17}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    std::vector<float> a(m * k), b(k * n), c0(m * n);
    for (float& x : a) x = d(rng);
    for (float& x : b) x = d(rng);
    for (float& x : c0) x = d(rng);
    for (bool acc : {false, true}) {
      std::vector<float> ref = c0, got = c0;
      gemm_scalar<float>(m, n, k, a.data(), b.data(), ref.data(), acc);
      {
        IsaGuard g(Isa::kAvx2);
        gemm(m, n, k, a.data(), b.data(), got.data(), acc);
      }
      close(got, ref, 1e-4f);
      // naive oracle for one entry
      double e = acc ? c0[0] : 0.0;
      for (std::size_t t = 0; t < k; ++t) e += double(a[t]) * b[t * n];
      CHECK(ref[0] == doctest::Approx(e).epsilon(1e-4));
    }
  }
}
