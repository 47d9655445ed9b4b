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

#include "neurop/service.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/rand.h>

#include "httplib.h"
#include "json.hpp"
#include "neurop/data.hpp"
#include "neurop/session.hpp"

namespace neurop {

using json = nlohmann::json;

int service_port_from_env(int fallback) {
  const char* env = std::getenv("NEUROP_PORT");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const long port = std::strtol(env, &end, 10);
  if (*end != '\0' || port < 1 || port > 65535) return fallback;
  return static_cast<int>(port);
}

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<unsigned char> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::vector<unsigned char> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("malformed base64");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

Image decode_image_bytes(std::string_view bytes) {
  static const std::string_view png_sig("\x89PNG\r\n\x1a\n", 8);
  if (bytes.substr(0, 8) == png_sig) return decode_png(std::vector<unsigned char>(bytes.begin(), bytes.end()));
  if (bytes.substr(0, 4) == std::string_view("II*\0", 4) || bytes.substr(0, 4) == std::string_view("MM\0*", 4)) {
    unsigned char tag[8];
    RAND_bytes(tag, sizeof(tag));
    std::string name = "neurop-upload-";
    for (unsigned char c : tag) name += "0123456789abcdef"[c >> 4], name += "0123456789abcdef"[c & 15];
    const auto path = std::filesystem::temp_directory_path() / (name + ".tif");
    {
      std::ofstream out(path, std::ios::binary);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    try {
      Image img = read_image(path);
      std::filesystem::remove(path);
      return img;
    } catch (...) {
      std::filesystem::remove(path);
      throw;
    }
  }
  throw std::invalid_argument("unsupported image format (expected PNG or TIFF)");
}

namespace {

std::string new_session_id() {
  unsigned char raw[16];
  if (RAND_bytes(raw, sizeof(raw)) != 1) {
    std::random_device rd;
    for (unsigned char& c : raw) c = static_cast<unsigned char>(rd());
  }
  std::string id;
  for (unsigned char c : raw) id += "0123456789abcdef"[c >> 4], id += "0123456789abcdef"[c & 15];
  return id;
}

std::string png_base64(const Image& image) { return base64_encode(encode_png(image)); }

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
  json body{{"error", message}};
  if (!field.empty()) body["field"] = field;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct RetouchService::Impl {
  std::shared_ptr<const RetouchModel> model;
  ServiceConfig config;
  httplib::Server server;
  int port = -1;
  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  // Caller holds the session mutex.
  json session_json(Session& s, bool with_intermediates) {
    const Image preview = s.preview();
    json body{{"id", s.id()},
              {"width", s.width()},
              {"height", s.height()},
              {"strengths", s.strengths()},
              {"predicted_strengths", s.predicted_strengths()},
              {"preview", {{"width", preview.dim(2)}, {"height", preview.dim(1)}, {"png_base64", png_base64(preview)}}},
              {"stats",
               {{"operator_applications", s.preview_counters().operator_applications},
                {"cache_hits", s.preview_counters().cache_hits}}}};
    if (with_intermediates) {
      json list = json::array();
      for (const Image& step : s.preview_intermediates()) list.push_back(png_base64(step));
      body["intermediates"] = list;
    }
    return body;
  }

  void routes() {
    server.set_payload_max_length(config.max_upload_bytes);
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data()) return send_error(res, 400, "expected a multipart/form-data upload", "image");
      const httplib::MultipartFormData* file = nullptr;
      if (req.has_file("image")) {
        file = &req.files.find("image")->second;
      } else if (!req.files.empty()) {
        file = &req.files.begin()->second;
      }
      if (file == nullptr || file->content.empty()) return send_error(res, 400, "no image file in upload", "image");
      Image image;
      try {
        image = decode_image_bytes(file->content);
      } catch (const std::exception& e) {
        return send_error(res, 400, e.what(), "image");
      }
      auto session = std::make_shared<Session>(new_session_id(), std::move(image), model, config.preview_edge);
      {
        std::lock_guard lock(sessions_mutex);
        sessions.emplace(session->id(), session);
      }
      std::lock_guard lock(session->mutex());
      res.status = 201;
      res.set_content(session_json(*session, req.has_param("intermediates")).dump(), "application/json");
    });

    server.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto session = find(req.matches[1]);
      if (!session) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
      std::lock_guard lock(session->mutex());
      res.set_content(session_json(*session, req.has_param("intermediates")).dump(), "application/json");
    });

    server.Patch(R"(/sessions/([0-9a-f]+)/strengths)", [this](const httplib::Request& req, httplib::Response& res) {
      auto session = find(req.matches[1]);
      if (!session) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        return send_error(res, 400, "body is not valid JSON", "strengths");
      }
      if (body.is_object() && body.contains("strengths")) body = body["strengths"];
      if (!body.is_array()) return send_error(res, 400, "expected a JSON array of numbers", "strengths");
      std::vector<double> values;
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (!body[i].is_number()) {
          return send_error(res, 400, "strengths[" + std::to_string(i) + "] is not a number",
                            "strengths[" + std::to_string(i) + "]");
        }
        values.push_back(body[i].get<double>());
      }
      std::lock_guard lock(session->mutex());
      try {
        session->set_strengths(values);
      } catch (const std::invalid_argument& e) {
        return send_error(res, 400, e.what(), "strengths");
      }
      const std::string intermediates = req.get_param_value("intermediates");
      const bool with_steps = !intermediates.empty() && intermediates != "0" && intermediates != "false";
      res.set_content(session_json(*session, with_steps).dump(), "application/json");
    });

    server.Get(R"(/sessions/([0-9a-f]+)/full)", [this](const httplib::Request& req, httplib::Response& res) {
      auto session = find(req.matches[1]);
      if (!session) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
      std::vector<unsigned char> png;
      {
        std::lock_guard lock(session->mutex());
        png = encode_png(session->full());
      }
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    server.Delete(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(sessions_mutex);
      if (sessions.erase(req.matches[1]) == 0) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
      res.status = 204;
    });
  }
};

RetouchService::RetouchService(std::shared_ptr<const RetouchModel> model, ServiceConfig config)
    : impl_(std::make_unique<Impl>()) {
  if (!model) throw std::invalid_argument("service needs a model");
  impl_->model = std::move(model);
  impl_->config = std::move(config);
  impl_->routes();
}

RetouchService::~RetouchService() { stop(); }

int RetouchService::bind() {
  if (impl_->port >= 0) return impl_->port;
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  impl_->port = port;
  return port;
}

void RetouchService::run() {
  bind();
  impl_->server.listen_after_bind();
}

void RetouchService::stop() {
  if (impl_) impl_->server.stop();
}

void RetouchService::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::size_t RetouchService::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

}  // namespace neurop
