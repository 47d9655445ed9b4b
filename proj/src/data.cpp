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

#include "neurop/data.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>

namespace neurop {

void validate_pair(const ImagePair& pair) {
  require_rgb(pair.input, "image pair input");
  require_rgb(pair.target, "image pair target");
  if (pair.input.shape() != pair.target.shape()) {
    throw std::invalid_argument("pair '" + pair.id + "': input " + shape_to_string(pair.input.shape()) +
                                " and target " + shape_to_string(pair.target.shape()) + " differ in size");
  }
  if (pair.mask && pair.mask->size() != pair.input.dim(1) * pair.input.dim(2)) {
    throw std::invalid_argument("pair '" + pair.id + "': mask does not match image size");
  }
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

bool is_tiff(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".tif" || ext == ".tiff";
}

bool is_supported(const std::filesystem::path& path) { return lower_extension(path) == ".png" || is_tiff(path); }

// Interleaved samples (8 or 16 bit, `channels` per pixel) -> planar float.
Image planar_from_interleaved(const std::vector<float>& samples, std::size_t h, std::size_t w, std::size_t channels) {
  Image img({3, h, w});
  const std::size_t n = h * w;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = channels >= 3 ? c : 0;
      img[c * n + i] = samples[i * channels + src];
    }
  }
  return img;
}

struct TiffCloser {
  void operator()(TIFF* t) const { TIFFClose(t); }
};

void quiet_tiff_handler(const char*, const char*, va_list) {}

struct TiffRaster {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<float> samples;
};

TiffRaster read_tiff(const std::filesystem::path& path) {
  TIFFSetWarningHandler(quiet_tiff_handler);
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.string().c_str(), "r"));
  if (!tif) throw std::runtime_error("cannot open TIFF '" + path.string() + "'");
  uint32_t w = 0, h = 0;
  uint16_t bits = 8, spp = 1, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  if (bits != 8 && bits != 16) throw std::runtime_error("'" + path.string() + "': unsupported TIFF bit depth " + std::to_string(bits));
  if (planar != PLANARCONFIG_CONTIG) throw std::runtime_error("'" + path.string() + "': planar TIFF not supported");
  if (w == 0 || h == 0) throw std::runtime_error("'" + path.string() + "': empty TIFF");
  TiffRaster raster{h, w, spp, std::vector<float>(std::size_t{w} * h * spp)};
  std::vector<unsigned char> line(TIFFScanlineSize(tif.get()));
  const float full_scale = bits == 8 ? 255.0f : 65535.0f;
  for (uint32_t y = 0; y < h; ++y) {
    if (TIFFReadScanline(tif.get(), line.data(), y, 0) < 0) {
      throw std::runtime_error("'" + path.string() + "': truncated TIFF at row " + std::to_string(y));
    }
    float* dst = raster.samples.data() + std::size_t{y} * w * spp;
    if (bits == 8) {
      for (std::size_t i = 0; i < std::size_t{w} * spp; ++i) dst[i] = line[i] / full_scale;
    } else {
      for (std::size_t i = 0; i < std::size_t{w} * spp; ++i) {
        uint16_t v;
        std::memcpy(&v, line.data() + 2 * i, 2);
        dst[i] = v / full_scale;
      }
    }
  }
  return raster;
}

void write_tiff16(const std::filesystem::path& path, const Image& image) {
  TIFFSetWarningHandler(quiet_tiff_handler);
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.string().c_str(), "w"));
  if (!tif) throw std::runtime_error("cannot create TIFF '" + path.string() + "'");
  const auto h = static_cast<uint32_t>(image.dim(1)), w = static_cast<uint32_t>(image.dim(2));
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, w);
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, h);
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 16);
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, h);
  const std::size_t n = std::size_t{h} * w;
  std::vector<uint16_t> line(std::size_t{w} * 3);
  for (uint32_t y = 0; y < h; ++y) {
    for (uint32_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image[c * n + std::size_t{y} * w + x], 0.0f, 1.0f);
        line[std::size_t{x} * 3 + c] = static_cast<uint16_t>(std::lround(v * 65535.0f));
      }
    }
    if (TIFFWriteScanline(tif.get(), line.data(), y, 0) < 0) {
      throw std::runtime_error("failed writing TIFF '" + path.string() + "'");
    }
  }
}

struct PngImage {
  png_image info;
  PngImage() {
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&info); }
};

Image decode_png_image(PngImage& png, const std::string& what) {
  const std::size_t h = png.info.height, w = png.info.width;
  std::vector<float> samples(3 * h * w);
  // libpng treats 16-bit files as linear; reading them as linear keeps the
  // stored values instead of re-encoding them to 8-bit sRGB
  if ((png.info.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png.info.format = PNG_FORMAT_LINEAR_RGB;
    std::vector<png_uint_16> buffer(samples.size());
    if (!png_image_finish_read(&png.info, nullptr, buffer.data(), 0, nullptr)) {
      throw std::runtime_error(what + ": " + png.info.message);
    }
    for (std::size_t i = 0; i < buffer.size(); ++i) samples[i] = buffer[i] / 65535.0f;
  } else {
    png.info.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(samples.size());
    if (!png_image_finish_read(&png.info, nullptr, buffer.data(), 0, nullptr)) {
      throw std::runtime_error(what + ": " + png.info.message);
    }
    for (std::size_t i = 0; i < buffer.size(); ++i) samples[i] = buffer[i] / 255.0f;
  }
  return planar_from_interleaved(samples, h, w, 3);
}

std::vector<unsigned char> interleave_u8(const Image& image) {
  const std::size_t n = image.dim(1) * image.dim(2);
  std::vector<unsigned char> buffer(3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      buffer[3 * i + c] = static_cast<unsigned char>(std::lround(std::clamp(image[c * n + i], 0.0f, 1.0f) * 255.0f));
  return buffer;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (is_tiff(path)) {
    const TiffRaster r = read_tiff(path);
    return planar_from_interleaved(r.samples, r.height, r.width, r.channels);
  }
  if (lower_extension(path) != ".png") throw std::runtime_error("unsupported image format '" + path.string() + "'");
  PngImage png;
  if (!png_image_begin_read_from_file(&png.info, path.string().c_str())) {
    throw std::runtime_error("cannot read PNG '" + path.string() + "': " + png.info.message);
  }
  return decode_png_image(png, path.string());
}

Tensor read_mask(const std::filesystem::path& path) {
  const Image rgb = read_image(path);
  const std::size_t h = rgb.dim(1), w = rgb.dim(2);
  Tensor mask({h, w});
  std::copy_n(rgb.data(), h * w, mask.data());
  return mask;
}

std::vector<unsigned char> encode_png(const Image& image) {
  require_rgb(image, "encode_png");
  PngImage png;
  png.info.width = static_cast<png_uint_32>(image.dim(2));
  png.info.height = static_cast<png_uint_32>(image.dim(1));
  png.info.format = PNG_FORMAT_RGB;
  const std::vector<unsigned char> pixels = interleave_u8(image);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.info, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + png.info.message);
  }
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&png.info, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + png.info.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(const std::vector<unsigned char>& bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.info, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("cannot decode PNG: ") + png.info.message);
  }
  return decode_png_image(png, "PNG");
}

void write_image(const std::filesystem::path& path, const Image& image) {
  require_rgb(image, "write_image");
  if (is_tiff(path)) return write_tiff16(path, image);
  const std::vector<unsigned char> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::map<std::string, std::filesystem::path> index_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_supported(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second) {
      throw std::runtime_error("duplicate image stem '" + stem + "' in " + dir.string());
    }
  }
  return out;
}

}  // namespace

Dataset load_pair_dataset(const std::filesystem::path& root, Split split) {
  const auto inputs = index_dir(root / "input");
  const auto targets = index_dir(root / "target");
  const auto masks = index_dir(root / "masks");

  std::vector<std::string> orphans;
  for (const auto& [stem, path] : inputs)
    if (!targets.contains(stem)) orphans.push_back("input/" + path.filename().string());
  for (const auto& [stem, path] : targets)
    if (!inputs.contains(stem)) orphans.push_back("target/" + path.filename().string());
  for (const auto& [stem, path] : masks)
    if (!inputs.contains(stem)) orphans.push_back("masks/" + path.filename().string());
  if (!orphans.empty()) {
    std::string msg = "unmatched images in " + root.string() + ":";
    for (const auto& o : orphans) msg += " " + o;
    throw std::runtime_error(msg);
  }

  Dataset ds;
  ds.split = split;
  for (const auto& [stem, in_path] : inputs) {
    ImagePair pair{stem, read_image(in_path), read_image(targets.at(stem)), std::nullopt};
    if (auto m = masks.find(stem); m != masks.end()) pair.mask = read_mask(m->second);
    validate_pair(pair);
    ds.pairs.push_back(std::move(pair));
  }
  return ds;
}

void save_pair_dataset(const std::filesystem::path& root, const Dataset& dataset) {
  std::filesystem::create_directories(root / "input");
  std::filesystem::create_directories(root / "target");
  for (const ImagePair& pair : dataset.pairs) {
    write_image(root / "input" / (pair.id + ".tif"), pair.input);
    write_image(root / "target" / (pair.id + ".tif"), pair.target);
    if (pair.mask) {
      std::filesystem::create_directories(root / "masks");
      const std::size_t h = pair.input.dim(1), w = pair.input.dim(2);
      Image m({3, h, w});
      for (std::size_t c = 0; c < 3; ++c) std::copy_n(pair.mask->data(), h * w, m.data() + c * h * w);
      write_image(root / "masks" / (pair.id + ".png"), m);
    }
  }
}

}  // namespace neurop
