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
#include <filesystem>
#include <fstream>
#include <random>

#include <png.h>
#include <unistd.h>

#include "doctest.h"
#include "grad_util.hpp"
#include "neurop/data.hpp"
#include "neurop/metrics.hpp"
#include "neurop/synthetic.hpp"
#include "oracles.hpp"

using namespace neurop;
using namespace neurop::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("neurop-test-" + std::to_string(::getpid()) + "-" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

Image random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  Image img({3, h, w});
  fill_uniform(img, rng, 0.0f, 1.0f);
  return img;
}

Image flat(std::size_t h, std::size_t w, std::array<float, 3> rgb) {
  Image img({3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i) img[c * h * w + i] = rgb[c];
  return img;
}

// Writes a raw PNG through libpng's simplified API in any sample format.
template <typename Sample>
void write_raw_png(const std::filesystem::path& path, std::uint32_t format, std::uint32_t w, std::uint32_t h,
                   const std::vector<Sample>& samples) {
  png_image info{};
  info.version = PNG_IMAGE_VERSION;
  info.width = w;
  info.height = h;
  info.format = format;
  REQUIRE(png_image_write_to_file(&info, path.string().c_str(), 0, samples.data(), 0, nullptr));
}

}  // namespace

TEST_CASE("8-bit PNG round trip is exact on the 8-bit grid") {
  TempDir dir("png8");
  std::mt19937_64 rng(1);
  Image img({3, 7, 5});
  for (float& v : img.values()) v = float(std::uniform_int_distribution<int>(0, 255)(rng)) / 255.0f;
  write_image(dir.path / "a.png", img);
  CHECK(read_image(dir.path / "a.png") == img);
  CHECK(decode_png(encode_png(img)) == img);

  // off-grid values round to the nearest level; out-of-range values clamp
  Image off({3, 1, 2}, std::vector<float>{-0.5f, 0.5f, 1.5f, 0.002f, 0.998f, 0.25f});
  const Image back = decode_png(encode_png(off));
  CHECK(back[0] == 0.0f);
  CHECK(back[2] == 1.0f);
  CHECK(back[1] == 128.0f / 255.0f);
  CHECK(back[3] == 1.0f / 255.0f);
  CHECK(back[4] == 254.0f / 255.0f);
  CHECK(back[5] == 64.0f / 255.0f);
}

TEST_CASE("16-bit TIFF round trip") {
  TempDir dir("tif");
  std::mt19937_64 rng(2);
  Image img({3, 6, 9});
  for (float& v : img.values()) v = float(std::uniform_int_distribution<int>(0, 65535)(rng)) / 65535.0f;
  img[0] = 1.0f;
  img[1] = 0.0f;
  write_image(dir.path / "a.tif", img);
  const Image back = read_image(dir.path / "a.tif");
  CHECK(back == img);
  CHECK(back[0] == 1.0f);
  write_image(dir.path / "b.tiff", img);
  CHECK(read_image(dir.path / "b.tiff") == img);
}

TEST_CASE("16-bit and gray PNG files") {
  TempDir dir("png16");
  std::vector<png_uint_16> rgb16{65535, 0, 32768, 1, 2, 3};
  write_raw_png(dir.path / "deep.png", PNG_FORMAT_LINEAR_RGB, 2, 1, rgb16);
  const Image deep = read_image(dir.path / "deep.png");
  CHECK(deep.shape() == Shape{3, 1, 2});
  CHECK(deep.at(0, 0, 0) == 1.0f);
  CHECK(deep.at(1, 0, 0) == 0.0f);
  CHECK(deep.at(2, 0, 0) == 32768.0f / 65535.0f);
  CHECK(deep.at(0, 0, 1) == 1.0f / 65535.0f);

  std::vector<unsigned char> gray{0, 51, 255};
  write_raw_png(dir.path / "gray.png", PNG_FORMAT_GRAY, 3, 1, gray);
  const Image g = read_image(dir.path / "gray.png");
  CHECK(g.shape() == Shape{3, 1, 3});
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(g.at(c, 0, 1) == 51.0f / 255.0f);
    CHECK(g.at(c, 0, 2) == 1.0f);
  }
  const Tensor m = read_mask(dir.path / "gray.png");
  CHECK(m.shape() == Shape{1, 3});
  CHECK(m[2] == 1.0f);

  std::vector<unsigned char> rgba{10, 20, 30, 255, 40, 50, 60, 255};
  write_raw_png(dir.path / "alpha.png", PNG_FORMAT_RGBA, 2, 1, rgba);
  const Image a = read_image(dir.path / "alpha.png");
  CHECK(a.at(0, 0, 1) == 40.0f / 255.0f);
  CHECK(a.at(2, 0, 0) == 30.0f / 255.0f);
}

TEST_CASE("image read errors") {
  TempDir dir("bad");
  CHECK_THROWS_AS(read_image(dir.path / "missing.png"), std::runtime_error);
  CHECK_THROWS_AS(read_image(dir.path / "a.jpg"), std::runtime_error);
  std::ofstream(dir.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(read_image(dir.path / "junk.png"), std::runtime_error);
  CHECK_THROWS_AS(decode_png({1, 2, 3}), std::runtime_error);
  CHECK_THROWS_AS(encode_png(Image({1, 2, 2})), std::invalid_argument);
}

TEST_CASE("pair datasets") {
  TempDir dir("pairs");
  CHECK(load_pair_dataset(dir.path).empty());
  CHECK(load_pair_dataset(dir.path / "nowhere").empty());

  Dataset data = make_synthetic_dataset(3, 12, 3);
  data.pairs[1].mask = Tensor({12, 12});
  for (std::size_t i = 0; i < 40; ++i) (*data.pairs[1].mask)[i] = 1;
  save_pair_dataset(dir.path, data);
  const Dataset back = load_pair_dataset(dir.path, Split::kTest);
  REQUIRE(back.size() == 3);
  CHECK(back.split == Split::kTest);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.pairs[i].id == data.pairs[i].id);
    for (std::size_t j = 0; j < data.pairs[i].input.size(); ++j) {
      CHECK(std::abs(back.pairs[i].input[j] - data.pairs[i].input[j]) <= 0.5f / 65535.0f + 1e-7f);
      CHECK(std::abs(back.pairs[i].target[j] - data.pairs[i].target[j]) <= 0.5f / 65535.0f + 1e-7f);
    }
  }
  CHECK(!back.pairs[0].mask);
  REQUIRE(back.pairs[1].mask);
  CHECK(*back.pairs[1].mask == *data.pairs[1].mask);

  std::filesystem::remove(dir.path / "target" / "synth_0001.tif");
  CHECK_THROWS_WITH_AS(load_pair_dataset(dir.path), doctest::Contains("input/synth_0001.tif"), std::runtime_error);
}

TEST_CASE("pair validation") {
  ImagePair p{"x", Image({3, 4, 4}), Image({3, 4, 5}), std::nullopt};
  CHECK_THROWS_WITH_AS(validate_pair(p), doctest::Contains("'x'"), std::invalid_argument);
  p.target = Image({3, 4, 4});
  CHECK_NOTHROW(validate_pair(p));
  p.mask = Tensor({4, 5});
  CHECK_THROWS_AS(validate_pair(p), std::invalid_argument);
}

TEST_CASE("psnr") {
  const Image a({3, 4, 4}, 0.5f);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(Image({3, 4, 4}, 0.0f), Image({3, 4, 4}, 1.0f)) == doctest::Approx(0.0).epsilon(1e-12));
  const Image z({3, 4, 4}, 0.25), d({3, 4, 4}, 0.375);
  CHECK(psnr(z, d) == doctest::Approx(10 * std::log10(1 / (0.125 * 0.125))).epsilon(1e-9));
  const Image zero({3, 2, 2}, 0.0f);
  Image sparse({3, 2, 2}, 0.0f);
  for (std::size_t i = 0; i < 12; i += 4) sparse[i] = 0.2f;
  // a quarter of the samples differ by 0.2: MSE 0.01, 20 dB
  CHECK(psnr(zero, sparse) == doctest::Approx(20.0).epsilon(1e-6));

  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Image x = random_image(9, 13, rng), y = random_image(9, 13, rng);
    CHECK(psnr(x, y) == doctest::Approx(oracle_psnr(x, y)).epsilon(1e-12));
    CHECK(psnr(x, y) == psnr(y, x));
  }
  CHECK_THROWS_AS(psnr(a, Image({3, 4, 5})), std::invalid_argument);
}

TEST_CASE("ssim") {
  std::mt19937_64 rng(5);
  const Image x = random_image(20, 24, rng);
  CHECK(ssim(x, x) == 1.0);
  const Image y = random_image(20, 24, rng);
  CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
  CHECK(ssim(x, y) < 0.5);

  // exactly one window position on an 11x11 image
  for (int t = 0; t < 5; ++t) {
    const Image a = random_image(11, 11, rng);
    Image b = a;
    for (float& v : b.values()) v = std::clamp(v + std::uniform_real_distribution<float>(-0.2f, 0.2f)(rng), 0.0f, 1.0f);
    std::vector<double> ga(121), gb(121);
    for (std::size_t i = 0; i < 121; ++i) {
      ga[i] = (double(a[i]) + a[121 + i] + a[242 + i]) / 3;
      gb[i] = (double(b[i]) + b[121 + i] + b[242 + i]) / 3;
    }
    CHECK(ssim(a, b) == doctest::Approx(oracle_ssim_window(ga, gb)).epsilon(1e-9));
  }
  // constant images: a pure luminance term
  const Image c1({3, 11, 11}, 0.5f), c2({3, 11, 11}, 0.6f);
  const double expect = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
  CHECK(ssim(c1, c2) == doctest::Approx(expect).epsilon(1e-6));

  // below the window size: one global unweighted window
  const Image s = random_image(5, 6, rng);
  CHECK(ssim(s, s) == 1.0);
}

TEST_CASE("delta e and Lab") {
  const Image black = flat(3, 3, {0, 0, 0}), white = flat(3, 3, {1, 1, 1});
  CHECK(delta_e(black, white) == doctest::Approx(100.0).epsilon(1e-3));
  CHECK(delta_e(white, white) == 0.0);
  const Lab w = srgb_to_lab({1, 1, 1});
  CHECK(w[0] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(std::abs(w[1]) < 1e-9);
  CHECK(std::abs(w[2]) < 1e-9);
  const Lab mid = srgb_to_lab({0.5, 0.5, 0.5});
  CHECK(mid[0] == doctest::Approx(53.389).epsilon(1e-3));
  const Lab red = srgb_to_lab({1, 0, 0});
  CHECK(red[0] == doctest::Approx(53.24).epsilon(1e-3));
  CHECK(red[1] == doctest::Approx(80.09).epsilon(2e-3));
  CHECK(red[2] == doctest::Approx(67.20).epsilon(2e-3));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const std::array<double, 3> rgb{u(rng), u(rng), u(rng)};
    const auto back = lab_to_srgb(srgb_to_lab(rgb));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(back[c] - rgb[c]) < 1e-4);
  }
  const Image a = random_image(6, 6, rng), b = random_image(6, 6, rng);
  CHECK(delta_e(a, b) == doctest::Approx(delta_e(b, a)).epsilon(1e-12));
  const ImageMetrics m = compare_images(a, b);
  CHECK(m.psnr == psnr(a, b));
  CHECK(m.ssim == ssim(a, b));
  CHECK(m.delta_e == delta_e(a, b));
}

TEST_CASE("synthetic data") {
  const Dataset a = make_synthetic_dataset(4, 32, 7), b = make_synthetic_dataset(4, 32, 7);
  REQUIRE(a.size() == 4);
  CHECK(a.pairs[0].id == "synth_0000");
  CHECK(a.pairs[3].id == "synth_0003");
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.pairs[i].input == b.pairs[i].input);
    CHECK(a.pairs[i].target == b.pairs[i].target);
    CHECK(a.pairs[i].input.shape() == Shape{3, 32, 32});
    for (float v : a.pairs[i].input.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    const auto [target, strengths] = synthetic_retouch(a.pairs[i].input);
    CHECK(target == a.pairs[i].target);
    for (float s : strengths) CHECK(std::abs(s) <= 1.0f);
  }
  CHECK(!(make_synthetic_dataset(1, 32, 8).pairs[0].input == a.pairs[0].input));
}
