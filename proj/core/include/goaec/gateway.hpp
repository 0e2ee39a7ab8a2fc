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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "goaec/kb.hpp"
#include "goaec/promptgen.hpp"

namespace goaec::llm {

using Millis = std::chrono::milliseconds;

struct LlmRequest {
  std::string prompt;
  std::size_t max_output_chars = 256;
  Millis timeout{10'000};
  std::string backend_id;
};

enum class ReplyStatus { Ok, TransportError, Timeout };

struct BackendReply {
  ReplyStatus status = ReplyStatus::Ok;
  std::string text;   // model output when Ok
  std::string error;  // diagnostic otherwise
};

// A correction model endpoint. Implementations must be safe to call from
// several threads at once; they may throw, the gateway contains it.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  virtual BackendReply complete(const LlmRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Response parsing

enum class ParseFailure { Empty, TooLong, TemplateEcho };

std::string_view to_string(ParseFailure failure);

// Trims whitespace and unwraps a response that is entirely one balanced
// "{...}" pair (repeatedly, so the result is a fixed point). Rejects empty
// results, results longer than max_output_chars characters, and echoes of the
// instruction template.
std::variant<std::string, ParseFailure> parse_response(std::string_view raw,
                                                       std::size_t max_output_chars = 256);

// ---------------------------------------------------------------------------
// Gateway

enum class Origin { Model, FallbackBestHypothesis };

std::string_view to_string(Origin origin);

struct CorrectionResult {
  std::string text;
  Origin origin = Origin::Model;
  std::string raw_response;
  Millis latency{0};
  // Why the fallback was taken; empty for Model results.
  std::string fallback_reason;
};

struct GatewayConfig {
  std::size_t max_output_chars = 256;
  Millis timeout{10'000};
  // Source ids tried in order when falling back; the first present in the
  // n-best set wins, otherwise the set's first hypothesis.
  std::vector<std::string> fallback_priority;
  // Extra attempts after a transport error or timeout (0 or 1).
  int retries = 0;
};

// Sends prompts to a backend and turns any failure into the fallback
// hypothesis. correct() never throws.
class CorrectionGateway {
 public:
  CorrectionGateway(std::shared_ptr<Backend> backend, GatewayConfig config = {});

  CorrectionResult correct(const prompt::PromptSpec& prompt, const prompt::NBestSet& nbest) const;

  // The hypothesis used on fallback.
  const prompt::Hypothesis& fallback_hypothesis(const prompt::NBestSet& nbest) const;

  const Backend& backend() const noexcept { return *backend_; }
  const GatewayConfig& config() const noexcept { return config_; }

 private:
  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
};

// ---------------------------------------------------------------------------
// Deterministic mock model

enum class MockBehavior {
  Echo,       // first listed hypothesis, unchanged
  KbReplace,  // medoid hypothesis with KB variants replaced by their terms
  FailAlways, // always times out
  Fixed,      // a configured response string
};

MockBehavior mock_behavior_from_string(std::string_view name);

// Reads the hypotheses ("ASR i Output: ...") and terminology lines from the
// rendered prompt, the way a model would. When constructed with a bound KB,
// KbReplace uses that KB's pairs instead of the prompt's terminology section.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockBehavior behavior, std::shared_ptr<const kb::KnowledgeBase> kb = nullptr,
                       std::string id = "mock");

  static std::shared_ptr<MockBackend> fixed(std::string response, std::string id = "mock");

  const std::string& id() const override { return id_; }
  BackendReply complete(const LlmRequest& request) override;

 private:
  MockBehavior behavior_;
  std::shared_ptr<const kb::KnowledgeBase> kb_;
  std::string id_;
  std::string fixed_response_;
};

// Pieces of a rendered prompt that the mock and tests need.
struct PromptView {
  std::vector<std::string> hypotheses;  // in displayed order
  std::vector<kb::TermPair> kb_lines;
};

PromptView read_prompt(std::string_view rendered);

// Hypothesis with the minimal summed edit distance to the others; ties go to
// the lexicographically smallest text. `labels` (same size as texts, or
// empty) breaks ties before text when given.
std::size_t medoid(const std::vector<std::string>& texts,
                   const std::vector<std::string>& labels = {});

// Replaces KB variants by their terms, scanning left to right and taking the
// longest matching variant at each position. `pairs` order decides between
// terms sharing one variant.
std::string apply_kb_replacements(std::string_view text, const std::vector<kb::TermPair>& pairs);

// ---------------------------------------------------------------------------
// HTTP backends and config

enum class WireProtocol {
  Simple,  // POST {"prompt": ...} -> {"text": ...}
  Chat,    // OpenAI-style chat completions
};

struct BackendConfig {
  std::string id = "default";
  std::string kind = "http";  // "http" or "mock"
  std::string base_url;       // e.g. http://127.0.0.1:8080/v1/generate
  std::string auth_token_env; // name of the env var holding a bearer token
  Millis timeout{10'000};
  std::size_t max_concurrent = 4;
  WireProtocol protocol = WireProtocol::Simple;
  std::string model;          // chat protocol only
  MockBehavior mock_behavior = MockBehavior::KbReplace;
  std::string mock_response;  // MockBehavior::Fixed
};

BackendConfig parse_backend_config(std::string_view json_text);
BackendConfig load_backend_config(const std::filesystem::path& path);

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace goaec::llm
