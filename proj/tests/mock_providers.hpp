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

// In-process HTTP stand-ins for the remote providers. Each endpoint answers
// deterministically so remote and fallback paths can be compared.

#include <atomic>
#include <string>
#include <thread>

#include "biaslens/embed.hpp"
#include "httplib.h"
#include "json.hpp"

namespace biaslens::testing {

class MockProviders {
 public:
  explicit MockProviders(std::size_t dim = 16) : dim_(dim) {
    using nlohmann::json;
    auto reply = [](httplib::Response& res, const json& j) {
      res.set_content(j.dump(), "application/json");
    };
    server_.Post("/embed", [this, reply](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls_;
      const auto body = json::parse(req.body);
      json rows = json::array();
      for (const auto& t : body.at("input")) {
        const auto v = fallback_embed(t.get<std::string>(), dim_, 5);
        rows.push_back(std::vector<double>(v.values().begin(), v.values().end()));
      }
      reply(res, {{"embeddings", rows}});
    });
    server_.Post("/embed-short", [reply](const httplib::Request&, httplib::Response& res) {
      reply(res, {{"embeddings", json::array({json::array({1.0, 2.0})})}});
    });
    server_.Post("/morph", [reply](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const std::string task = body.at("task");
      const std::string text = body.at("text");
      reply(res, {{"text", task == "upshift" ? text + " Indeed." : text.substr(0, text.find('.') + 1)}});
    });
    server_.Post("/generate", [reply](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      reply(res, {{"continuation", body.at("context").get<std::string>()}});
    });
    server_.Post("/score", [reply](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const std::size_t n = body.at("text").get<std::string>().size();
      reply(res, {{"token_logprobs", std::vector<double>(n % 7 + 1, -0.6931471805599453)}});
    });
    server_.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>", "text/html");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockProviders() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int embed_calls() const { return embed_calls_; }

 private:
  std::size_t dim_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> embed_calls_{0};
};

}  // namespace biaslens::testing
