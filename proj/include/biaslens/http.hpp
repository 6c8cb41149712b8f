// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal JSON-over-HTTP client used by every remote provider.

#include <chrono>
#include <string>
#include <utility>

#include "biaslens/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace biaslens::http {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

inline Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos && url.compare(0, scheme, "http") == 0,
          ErrorKind::kInvalidArgument,
          "endpoint must be an http:// URL, got '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  if (slash == std::string::npos) {
    ep.origin = url;
    ep.path = "/";
  } else {
    ep.origin = url.substr(0, slash);
    ep.path = url.substr(slash);
  }
  require(ep.origin.size() > scheme + 3, ErrorKind::kInvalidArgument,
          "endpoint has no host: '" + url + "'");
  return ep;
}

struct PostOptions {
  std::chrono::milliseconds timeout{30000};
  int retries = 2;  // extra attempts after a transport failure
};

// POSTs `body` and returns the parsed JSON response. Transport failures,
// non-2xx statuses and unparsable bodies all raise kProvider naming the URL.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                const PostOptions& opts = {}) {
  const Endpoint ep = parse_endpoint(url);
  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(opts.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    auto res = client.Post(ep.path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      fail(ErrorKind::kProvider,
           url + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      fail(ErrorKind::kProvider, url + ": response is not valid JSON");
    }
  }
  fail(ErrorKind::kProvider, url + ": " + last_error);
}

}  // namespace biaslens::http
