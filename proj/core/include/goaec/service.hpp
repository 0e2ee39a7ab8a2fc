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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "goaec/corpus.hpp"
#include "goaec/gateway.hpp"
#include "goaec/kb.hpp"
#include "goaec/promptgen.hpp"

namespace goaec::service {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path backend_config;
  std::filesystem::path kb_path;
  bool persist_kb = false;  // write kb_path after every mutation
  std::size_t k_max = prompt::kDefaultMaxHypotheses;
  std::size_t max_kb_lines = prompt::kDefaultMaxKbLines;
  std::vector<std::string> fallback_priority;
  bool fallback_enabled = true;
  llm::Millis timeout{10'000};
  int retries = 0;
  // Name of the env var holding the bearer token for /v1/kb; empty: no auth.
  std::string auth_token_env;
  std::filesystem::path feedback_log;  // empty: keep feedback in memory
  bool auto_insert = false;
  std::size_t auto_insert_min_support = 2;
  std::size_t mine_max_span = 3;
  std::size_t served_capacity = 100'000;  // utterances remembered for feedback
};

// JSON keys mirror the field names, with timeout_ms for timeout. Relative
// paths resolve against base_dir.
ServiceConfig parse_service_config(std::string_view json_text, const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);

struct Reply {
  int status = 200;
  std::string body;  // JSON
};

// The correction service. Handlers are transport-independent and safe to
// call concurrently; start() serves them over HTTP/1.1.
class CorrectionService {
 public:
  CorrectionService(ServiceConfig config, std::shared_ptr<llm::Backend> backend,
                    kb::KnowledgeBase initial = kb::KnowledgeBase());
  ~CorrectionService();

  CorrectionService(const CorrectionService&) = delete;
  CorrectionService& operator=(const CorrectionService&) = delete;

  Reply correct(std::string_view body) const;
  Reply kb_add(std::string_view body, std::string_view authorization);
  Reply kb_list(std::string_view authorization) const;
  Reply kb_remove(std::string_view body, std::string_view authorization);
  Reply feedback(std::string_view body);
  Reply health() const;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Serves on the calling thread until stop().
  void run();
  void stop();

  kb::KbStore& kb() noexcept;
  const ServiceConfig& config() const noexcept { return config_; }
  // Feedback lines accepted so far (also appended to feedback_log).
  std::vector<std::string> feedback_lines() const;

 private:
  struct Impl;
  ServiceConfig config_;
  std::unique_ptr<Impl> impl_;
};

// Builds a service from a config file: loads the backend config and KB.
std::unique_ptr<CorrectionService> make_service(const ServiceConfig& config);

// Reads feedback log lines as corpus rows: hypotheses are the served ones,
// the reference is the player's final text.
std::vector<corpus::UtteranceRecord> read_feedback_log(std::istream& in,
                                                       const std::string& source_name = "<stream>");

}  // namespace goaec::service
