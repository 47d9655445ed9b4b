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

#include "neurop/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace neurop {

namespace {

void check(const Image& a, const Image& b, const char* what) {
  require_rgb(a, what);
  a.require_same_shape(b, what);
}

std::vector<double> gray(const Image& img) {
  const std::size_t n = img.dim(1) * img.dim(2);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = (static_cast<double>(img[i]) + img[n + i] + img[2 * n + i]) / 3.0;
  return g;
}

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

double ssim_formula(double mu_a, double mu_b, double var_a, double var_b, double cov) {
  return ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) / ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

// sRGB (linear) -> XYZ, D65.
const Eigen::Matrix3d& rgb_to_xyz() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,  //
                                    0.2126729, 0.7151522, 0.0721750,                       //
                                    0.0193339, 0.1191920, 0.9503041)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& xyz_to_rgb() {
  static const Eigen::Matrix3d m = rgb_to_xyz().inverse();
  return m;
}

// Reference white: the XYZ of sRGB (1,1,1).
const Eigen::Vector3d& white() {
  static const Eigen::Vector3d w = rgb_to_xyz() * Eigen::Vector3d::Ones();
  return w;
}

double linearize(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }
double delinearize(double c) { return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055; }

constexpr double kDelta = 6.0 / 29.0;
double lab_f(double t) { return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3 * kDelta * kDelta) + 4.0 / 29.0; }
double lab_f_inv(double t) { return t > kDelta ? t * t * t : 3 * kDelta * kDelta * (t - 4.0 / 29.0); }

}  // namespace

double psnr(const Image& a, const Image& b) {
  check(a, b, "psnr");
  double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.size());
  return mse == 0.0 ? kPsnrCap : 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  check(a, b, "ssim");
  const std::size_t h = a.dim(1), w = a.dim(2);
  const std::vector<double> ga = gray(a), gb = gray(b);
  if (h < kWindow || w < kWindow) {
    const double n = static_cast<double>(ga.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ga.size(); ++i) ma += ga[i], mb += gb[i];
    ma /= n, mb /= n;
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      va += (ga[i] - ma) * (ga[i] - ma);
      vb += (gb[i] - mb) * (gb[i] - mb);
      cov += (ga[i] - ma) * (gb[i] - mb);
    }
    return ssim_formula(ma, mb, va / n, vb / n, cov / n);
  }

  double kernel[kWindow];
  double ksum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    kernel[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  const std::size_t oh = h - kWindow + 1, ow = w - kWindow + 1;
  // Separable filtering of a, b, a^2, b^2, ab: rows first, then columns.
  std::vector<double> src[5];
  src[0] = ga, src[1] = gb;
  src[2].resize(ga.size()), src[3].resize(ga.size()), src[4].resize(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    src[2][i] = ga[i] * ga[i], src[3][i] = gb[i] * gb[i], src[4][i] = ga[i] * gb[i];
  }
  std::vector<double> out[5];
  for (int s = 0; s < 5; ++s) {
    std::vector<double> rows(h * ow);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0;
        for (int k = 0; k < kWindow; ++k) acc += kernel[k] * src[s][y * w + x + k];
        rows[y * ow + x] = acc;
      }
    }
    out[s].resize(oh * ow);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0;
        for (int k = 0; k < kWindow; ++k) acc += kernel[k] * rows[(y + k) * ow + x];
        out[s][y * ow + x] = acc;
      }
    }
  }
  double total = 0;
  for (std::size_t i = 0; i < oh * ow; ++i) {
    const double ma = out[0][i], mb = out[1][i];
    total += ssim_formula(ma, mb, out[2][i] - ma * ma, out[3][i] - mb * mb, out[4][i] - ma * mb);
  }
  return total / static_cast<double>(oh * ow);
}

Lab srgb_to_lab(const std::array<double, 3>& rgb) {
  const Eigen::Vector3d lin(linearize(rgb[0]), linearize(rgb[1]), linearize(rgb[2]));
  const Eigen::Vector3d xyz = rgb_to_xyz() * lin;
  const double fx = lab_f(xyz[0] / white()[0]), fy = lab_f(xyz[1] / white()[1]), fz = lab_f(xyz[2] / white()[2]);
  return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

std::array<double, 3> lab_to_srgb(const Lab& lab) {
  const double fy = (lab[0] + 16) / 116, fx = fy + lab[1] / 500, fz = fy - lab[2] / 200;
  const Eigen::Vector3d xyz(lab_f_inv(fx) * white()[0], lab_f_inv(fy) * white()[1], lab_f_inv(fz) * white()[2]);
  const Eigen::Vector3d lin = xyz_to_rgb() * xyz;
  return {delinearize(lin[0]), delinearize(lin[1]), delinearize(lin[2])};
}

double delta_e(const Image& a, const Image& b) {
  check(a, b, "delta_e");
  const std::size_t n = a.dim(1) * a.dim(2);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Lab la = srgb_to_lab({a[i], a[n + i], a[2 * n + i]});
    const Lab lb = srgb_to_lab({b[i], b[n + i], b[2 * n + i]});
    total += std::sqrt((la[0] - lb[0]) * (la[0] - lb[0]) + (la[1] - lb[1]) * (la[1] - lb[1]) +
                       (la[2] - lb[2]) * (la[2] - lb[2]));
  }
  return total / static_cast<double>(n);
}

ImageMetrics compare_images(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b), delta_e(a, b)}; }

}  // namespace neurop
