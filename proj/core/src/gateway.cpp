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

#include "goaec/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <tuple>

#include "goaec/error.hpp"
#include "goaec/metrics.hpp"
#include "goaec/utf8.hpp"

namespace goaec::llm {

std::string_view to_string(ParseFailure failure) {
  switch (failure) {
    case ParseFailure::Empty:
      return "empty";
    case ParseFailure::TooLong:
      return "too_long";
    case ParseFailure::TemplateEcho:
      return "template_echo";
  }
  return "unknown";
}

std::string_view to_string(Origin origin) {
  return origin == Origin::Model ? "model" : "fallback";
}

namespace {

// True when text[0] == '{' and its matching '}' is the last byte.
bool wrapped_in_braces(std::string_view text) {
  if (text.size() < 2 || text.front() != '{' || text.back() != '}') return false;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}') {
      if (--depth == 0) return i + 1 == text.size();
    }
  }
  return false;
}

bool echoes_template(std::string_view text) {
  static constexpr std::string_view kMarkers[] = {"Output Requirements", "ASR 1 Output"};
  for (auto m : kMarkers) {
    if (text.find(m) != std::string_view::npos) return true;
  }
  // The template's own placeholder notation, returned verbatim.
  return text == "Corrected ASR Text" || text == "Original Text";
}

}  // namespace

std::variant<std::string, ParseFailure> parse_response(std::string_view raw,
                                                       std::size_t max_output_chars) {
  std::string_view text = utf8::trim(raw);
  while (wrapped_in_braces(text)) text = utf8::trim(text.substr(1, text.size() - 2));
  if (text.empty()) return ParseFailure::Empty;
  if (echoes_template(text)) return ParseFailure::TemplateEcho;
  if (utf8::length(text) > max_output_chars) return ParseFailure::TooLong;
  return std::string(text);
}

// ---------------------------------------------------------------------------

CorrectionGateway::CorrectionGateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) throw InvalidArgument("gateway needs a backend");
  config_.retries = std::clamp(config_.retries, 0, 1);
}

const prompt::Hypothesis& CorrectionGateway::fallback_hypothesis(const prompt::NBestSet& nbest) const {
  for (const auto& source : config_.fallback_priority) {
    if (const auto* h = nbest.find(source)) return *h;
  }
  return nbest.hypotheses.at(0);
}

CorrectionResult CorrectionGateway::correct(const prompt::PromptSpec& prompt,
                                            const prompt::NBestSet& nbest) const {
  const auto start = std::chrono::steady_clock::now();
  CorrectionResult result;
  std::string reason;
  try {
    const LlmRequest request{prompt.rendered, config_.max_output_chars, config_.timeout, backend_->id()};
    BackendReply reply;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      try {
        reply = backend_->complete(request);
      } catch (const std::exception& e) {
        reply = {ReplyStatus::TransportError, {}, e.what()};
      } catch (...) {
        reply = {ReplyStatus::TransportError, {}, "unknown backend failure"};
      }
      if (reply.status == ReplyStatus::Ok) break;
    }
    if (reply.status == ReplyStatus::Ok) {
      result.raw_response = reply.text;
      auto parsed = parse_response(reply.text, config_.max_output_chars);
      if (auto* text = std::get_if<std::string>(&parsed)) {
        result.text = std::move(*text);
        result.origin = Origin::Model;
      } else {
        reason = "unparseable response (" + std::string(to_string(std::get<ParseFailure>(parsed))) + ")";
      }
    } else {
      reason = (reply.status == ReplyStatus::Timeout ? "timeout: " : "transport error: ") + reply.error;
    }
  } catch (const std::exception& e) {
    reason = e.what();
  } catch (...) {
    reason = "unknown failure";
  }

  if (!reason.empty()) {
    spdlog::warn("backend '{}' fell back: {}", backend_->id(), reason);
    result.origin = Origin::FallbackBestHypothesis;
    result.fallback_reason = reason;
    result.text = nbest.hypotheses.empty() ? std::string() : fallback_hypothesis(nbest).text;
  }
  result.latency = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
  return result;
}

// ---------------------------------------------------------------------------

MockBehavior mock_behavior_from_string(std::string_view name) {
  if (name == "echo") return MockBehavior::Echo;
  if (name == "kb-replace" || name == "kb_replace") return MockBehavior::KbReplace;
  if (name == "fail" || name == "fail-always") return MockBehavior::FailAlways;
  if (name == "fixed") return MockBehavior::Fixed;
  throw ConfigError("unknown mock behavior \"" + std::string(name) + "\"");
}

MockBackend::MockBackend(MockBehavior behavior, std::shared_ptr<const kb::KnowledgeBase> kb,
                         std::string id)
    : behavior_(behavior), kb_(std::move(kb)), id_(std::move(id)) {}

std::shared_ptr<MockBackend> MockBackend::fixed(std::string response, std::string id) {
  auto backend = std::make_shared<MockBackend>(MockBehavior::Fixed, nullptr, std::move(id));
  backend->fixed_response_ = std::move(response);
  return backend;
}

BackendReply MockBackend::complete(const LlmRequest& request) {
  switch (behavior_) {
    case MockBehavior::FailAlways:
      return {ReplyStatus::Timeout, {}, "mock backend always times out"};
    case MockBehavior::Fixed:
      return {ReplyStatus::Ok, fixed_response_, {}};
    case MockBehavior::Echo: {
      const PromptView view = read_prompt(request.prompt);
      return {ReplyStatus::Ok, view.hypotheses.empty() ? std::string() : view.hypotheses.front(), {}};
    }
    case MockBehavior::KbReplace: {
      const PromptView view = read_prompt(request.prompt);
      if (view.hypotheses.empty()) return {ReplyStatus::Ok, {}, {}};
      const std::string& chosen = view.hypotheses[medoid(view.hypotheses)];
      const std::vector<kb::TermPair> pairs = kb_ ? kb_->retrieve(view.hypotheses) : view.kb_lines;
      return {ReplyStatus::Ok, apply_kb_replacements(chosen, pairs), {}};
    }
  }
  return {ReplyStatus::TransportError, {}, "unhandled mock behavior"};
}

PromptView read_prompt(std::string_view rendered) {
  PromptView view;
  bool in_kb = false;
  std::size_t pos = 0;
  while (pos <= rendered.size()) {
    const auto nl = rendered.find('\n', pos);
    const std::string_view line =
        rendered.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? rendered.size() + 1 : nl + 1;

    if (line == "correct word | erroneous word") {
      in_kb = true;
      continue;
    }
    if (in_kb) {
      const auto bar = line.find(" | ");
      if (line.empty() || line == "---" || bar == std::string_view::npos) {
        in_kb = line == "(no entries)";
        continue;
      }
      view.kb_lines.push_back({std::string(line.substr(0, bar)), std::string(line.substr(bar + 3))});
      continue;
    }
    if (line.starts_with("ASR ")) {
      const auto colon = line.find(" Output: ");
      if (colon == std::string_view::npos || colon <= 4) continue;
      const auto number = line.substr(4, colon - 4);
      if (!std::all_of(number.begin(), number.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
      view.hypotheses.emplace_back(line.substr(colon + 9));
    }
  }
  return view;
}

std::size_t medoid(const std::vector<std::string>& texts, const std::vector<std::string>& labels) {
  if (texts.empty()) throw InvalidArgument("medoid of an empty set");
  std::vector<std::u32string> decoded;
  decoded.reserve(texts.size());
  for (const auto& t : texts) decoded.push_back(utf8::decode(t));

  std::size_t best = 0;
  std::size_t best_sum = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::size_t sum = 0;
    for (std::size_t j = 0; j < texts.size(); ++j) {
      if (i != j) sum += metrics::edit_distance(decoded[i], decoded[j]);
    }
    const bool better = [&] {
      if (sum != best_sum) return sum < best_sum;
      if (!labels.empty()) return labels[i] < labels[best];
      return texts[i] < texts[best];
    }();
    if (better) {
      best = i;
      best_sum = sum;
    }
  }
  return best;
}

std::string apply_kb_replacements(std::string_view text, const std::vector<kb::TermPair>& pairs) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const kb::TermPair* match = nullptr;
    for (const auto& p : pairs) {
      if (p.erroneous.empty() || text.compare(pos, p.erroneous.size(), p.erroneous) != 0) continue;
      if (!match || p.erroneous.size() > match->erroneous.size()) match = &p;
    }
    if (match) {
      out += match->correct;
      pos += match->erroneous.size();
      continue;
    }
    // Copy one UTF-8 sequence.
    std::size_t len = 1;
    while (pos + len < text.size() && (static_cast<unsigned char>(text[pos + len]) & 0xC0) == 0x80) ++len;
    out.append(text.substr(pos, len));
    pos += len;
  }
  return out;
}

}  // namespace goaec::llm
