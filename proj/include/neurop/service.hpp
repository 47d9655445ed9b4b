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

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurop/pipeline.hpp"

namespace neurop {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_upload_bytes = std::size_t{64} << 20;
  std::size_t preview_edge = 512;
};

/// NEUROP_PORT if set to a valid port, otherwise `fallback`.
int service_port_from_env(int fallback = 8080);

/// HTTP front end for interactive retouching sessions:
///   POST   /sessions                multipart upload (field "image", PNG or TIFF)
///   GET    /sessions/{id}           current strengths and preview
///   PATCH  /sessions/{id}/strengths JSON array of K numbers, clamped to [-2, 2];
///                                   ?intermediates=1 adds per-step previews
///   GET    /sessions/{id}/full      full-resolution PNG
///   DELETE /sessions/{id}
/// Previews are base64 PNGs in the JSON body. Unknown sessions give 404,
/// malformed strengths 400, uploads above max_upload_bytes 413. The model is
/// shared read-only; requests on one session are serialized.
class RetouchService {
 public:
  RetouchService(std::shared_ptr<const RetouchModel> model, ServiceConfig config = {});
  ~RetouchService();
  RetouchService(const RetouchService&) = delete;
  RetouchService& operator=(const RetouchService&) = delete;

  /// Binds the listening socket and returns the port. Throws std::runtime_error
  /// if the address is unavailable.
  int bind();
  /// Serves until stop(); binds first if needed.
  void run();
  void stop();
  /// Blocks until run() is accepting connections.
  void wait_until_ready() const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::span<const unsigned char> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<unsigned char> base64_decode(std::string_view text);

/// PNG or TIFF bytes (detected by signature) to [0,1] RGB.
Image decode_image_bytes(std::string_view bytes);

}  // namespace neurop
