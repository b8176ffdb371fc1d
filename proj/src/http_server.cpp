// Copyright 2026 The xmlops Authors.
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

#include "httplib.h"
#include "xmlops/http_api.hpp"

namespace xmlops {

struct HttpServer::Impl {
  explicit Impl(Platform& p) : platform(p) {}
  Platform& platform;
  httplib::Server server;
};

HttpServer::HttpServer(Platform& platform) : impl_(std::make_unique<Impl>(platform)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api;
    api.method = req.method;
    api.path = req.path;
    for (const auto& [k, v] : req.params) api.query[k] = v;
    api.body = req.body;
    const ApiResponse out = handle_request(impl_->platform, api);
    res.status = out.status;
    res.set_header("X-Xmlops-Schema-Version", std::to_string(kApiSchemaVersion));
    res.set_content(out.serialized(), out.content_type);
  };
  auto& s = impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Delete(".*", handler);
  s.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) {
    const int bound = s.bind_to_any_port(host);
    if (bound < 0) throw_precondition("cannot bind " + host + ":0");
    return bound;
  }
  if (!s.bind_to_port(host, port)) {
    throw_precondition("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace xmlops
