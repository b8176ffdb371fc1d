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

// JSON-over-HTTP surface. The router is transport-free so it can be driven
// in-process (tests, CLI); serve() binds it to an httplib server.
#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "xmlops/platform.hpp"

namespace xmlops {

inline constexpr int kApiSchemaVersion = 1;

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  Json body;
  // Set for non-JSON bodies (DOT graphs).
  std::optional<std::string> text;
  std::string content_type = "application/json";

  std::string serialized() const { return text ? *text : body.dump(); }
};

int http_status(ErrorCode code);
ApiResponse error_response(ErrorCode code, const std::string& message);

// Dispatches one request. Takes the platform lock for the duration.
ApiResponse handle_request(Platform& platform, const ApiRequest& request);

// Entity field tables served at GET /schema.
Json api_schema();
Json openapi_document();

// Request decoders shared with the CLI.
TrainRequest train_request_from_json(const Json& body);
DeploymentRequest deployment_request_from_json(const Json& body);
FeedbackRequest feedback_request_from_json(const Json& body);
CompareRequest compare_request_from_json(const Json& body);

class HttpServer {
 public:
  explicit HttpServer(Platform& platform);
  ~HttpServer();

  // Binds host:port (port 0 picks a free one); throws precondition on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace xmlops
