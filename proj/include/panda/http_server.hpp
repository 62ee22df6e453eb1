// Copyright 2026 The PANDA Authors
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

#include <cstdlib>
#include <string>
#include <utility>

#include "httplib.h"
#include "panda/errors.hpp"
#include "panda/service.hpp"

namespace panda::service {

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

// "host:port" or ":port". Falls back to PANDA_ADDR, then the default.
inline ListenAddress resolve_address(const std::string& flag) {
  std::string spec = flag;
  if (spec.empty()) {
    if (const char* env = std::getenv("PANDA_ADDR")) spec = env;
  }
  ListenAddress a;
  if (spec.empty()) return a;
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("listen address must be host:port, got '" + spec + "'",
                          "addr");
  }
  if (colon > 0) a.host = spec.substr(0, colon);
  try {
    std::size_t used = 0;
    a.port = std::stoi(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1 || a.port < 0 || a.port > 65535) {
      throw std::invalid_argument(spec);
    }
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in listen address '" + spec + "'", "addr");
  }
  return a;
}

// Routes every request under /sessions to `svc`. The server must not
// outlive `svc`.
inline void mount(httplib::Server& server, Service& svc) {
  auto forward = [&svc](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = svc.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/sessions.*)", forward);
  server.Post(R"(/sessions.*)", forward);
  server.Put(R"(/sessions.*)", forward);
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(ApiError(res.status, "not_found", "no such endpoint").body().dump(),
                      "application/json");
    }
  });
}

}  // namespace panda::service
