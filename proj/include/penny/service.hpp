// SPDX-License-Identifier: Apache-2.0
/*
Copyright (C) 2026 The Penny Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace penny::service {

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path catalog_dir = "catalogs";
  std::string ui_origin;  // CORS origin; empty disables CORS headers
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

// In-memory analysis sessions behind the HTTP JSON API. `handle` is the
// transport-independent entry point; `listen` serves it over HTTP/1.1.
class Service {
 public:
  explicit Service(Config config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const std::string& method, const std::string& path,
                  const std::multimap<std::string, std::string>& query, const std::string& body);

  // Blocks until stop(). Returns false when the address cannot be bound.
  bool listen();
  // Binds to an ephemeral port on `host` and returns it (0 on failure); then call listen_after_bind().
  int bind_ephemeral();
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "host:port" -> (host, port); throws InvalidArgument.
std::pair<std::string, int> parse_listen(const std::string& text);

}  // namespace penny::service
