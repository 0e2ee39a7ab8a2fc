// Copyright (c) 2026 The goaec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <semaphore>
#include <sstream>

#include "goaec/error.hpp"
#include "goaec/gateway.hpp"

namespace goaec::llm {

namespace {

using nlohmann::json;

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint parse_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(:\d+)?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw ConfigError("invalid backend URL \"" + url + "\"");
  Endpoint ep;
  ep.scheme_host_port = m[1].str() + "://" + m[2].str() + m[3].str();
  ep.path = m[4].matched ? m[4].str() : "/";
  return ep;
}

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config)
      : config_(std::move(config)),
        endpoint_(parse_url(config_.base_url)),
        slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrent, 1, 1024))) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint_.scheme_host_port.starts_with("https")) {
      throw ConfigError("this build has no TLS support; use an http:// backend URL");
    }
#endif
  }

  const std::string& id() const override { return config_.id; }

  BackendReply complete(const LlmRequest& request) override {
    const auto timeout = std::min(request.timeout, config_.timeout);
    if (!slots_.try_acquire_for(timeout)) {
      return {ReplyStatus::Timeout, {}, "no free request slot within the timeout"};
    }
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(endpoint_.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!config_.auth_token_env.empty()) {
      if (const char* token = std::getenv(config_.auth_token_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }

    json body;
    if (config_.protocol == WireProtocol::Chat) {
      body = {{"model", config_.model},
              {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
              {"stream", false}};
    } else {
      body = {{"prompt", request.prompt}, {"max_output_chars", request.max_output_chars}};
    }

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint_.path, headers,
                           body.dump(-1, ' ', false, json::error_handler_t::replace),
                           "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read &&
                              std::chrono::steady_clock::now() - started >= timeout);
      return {timed_out ? ReplyStatus::Timeout : ReplyStatus::TransportError, {},
              httplib::to_string(err)};
    }
    if (res->status != 200) {
      return {ReplyStatus::TransportError, {}, "HTTP status " + std::to_string(res->status)};
    }
    try {
      const json reply = json::parse(res->body);
      if (config_.protocol == WireProtocol::Chat) {
        return {ReplyStatus::Ok, reply.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
      }
      return {ReplyStatus::Ok, reply.at("text").get<std::string>(), {}};
    } catch (const json::exception& e) {
      return {ReplyStatus::TransportError, {}, std::string("malformed backend response: ") + e.what()};
    }
  }

 private:
  BackendConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace

BackendConfig parse_backend_config(std::string_view json_text) {
  BackendConfig cfg;
  try {
    const json j = json::parse(json_text);
    cfg.id = j.value("id", cfg.id);
    cfg.kind = j.value("kind", cfg.kind);
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.auth_token_env = j.value("auth_token_env", cfg.auth_token_env);
    cfg.timeout = Millis(j.value("timeout_ms", static_cast<long long>(cfg.timeout.count())));
    cfg.max_concurrent = j.value("max_concurrent", cfg.max_concurrent);
    cfg.model = j.value("model", cfg.model);
    const std::string protocol = j.value("protocol", std::string("simple"));
    if (protocol == "simple") {
      cfg.protocol = WireProtocol::Simple;
    } else if (protocol == "chat") {
      cfg.protocol = WireProtocol::Chat;
    } else {
      throw ConfigError("unknown backend protocol \"" + protocol + "\"");
    }
    if (j.contains("behavior")) cfg.mock_behavior = mock_behavior_from_string(j.at("behavior").get<std::string>());
    cfg.mock_response = j.value("response", cfg.mock_response);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend config: ") + e.what());
  }
  if (cfg.kind != "http" && cfg.kind != "mock") throw ConfigError("unknown backend kind \"" + cfg.kind + "\"");
  if (cfg.kind == "http" && cfg.base_url.empty()) throw ConfigError("backend config: base_url is required");
  if (cfg.timeout.count() <= 0) throw ConfigError("backend config: timeout_ms must be positive");
  if (cfg.max_concurrent == 0) throw ConfigError("backend config: max_concurrent must be positive");
  return cfg;
}

BackendConfig load_backend_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open backend config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_backend_config(ss.str());
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "mock") {
    if (config.mock_behavior == MockBehavior::Fixed) return MockBackend::fixed(config.mock_response, config.id);
    return std::make_shared<MockBackend>(config.mock_behavior, nullptr, config.id);
  }
  return std::make_shared<HttpBackend>(config);
}

}  // namespace goaec::llm
