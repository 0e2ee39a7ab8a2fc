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

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "goaec/error.hpp"
#include "goaec/gateway.hpp"
#include "goaec/random.hpp"

namespace {

using namespace goaec;
using llm::ParseFailure;
using nlohmann::json;

prompt::NBestSet enemy_set() {
  prompt::NBestSet set;
  set.hypotheses = {{"ASR-B", "DNA在哪"}, {"ASR-A", "滴哪在哪"}, {"ASR-T", "敌人在哪"}};
  set.utterance_id = "u1";
  return set;
}

std::string parsed(std::string_view raw) {
  auto r = llm::parse_response(raw);
  return std::holds_alternative<std::string>(r) ? std::get<std::string>(r) : "<failure>";
}

ParseFailure failure(std::string_view raw, std::size_t max_chars = 256) {
  auto r = llm::parse_response(raw, max_chars);
  EXPECT_TRUE(std::holds_alternative<ParseFailure>(r)) << raw;
  return std::holds_alternative<ParseFailure>(r) ? std::get<ParseFailure>(r) : ParseFailure::Empty;
}

llm::CorrectionResult run(std::shared_ptr<llm::Backend> backend, llm::GatewayConfig config = {},
                          std::vector<kb::TermPair> pairs = {}) {
  const auto set = enemy_set();
  const auto spec = prompt::build_prompt(set, pairs, 1);
  return llm::CorrectionGateway(std::move(backend), std::move(config)).correct(spec, set);
}

class ThrowingBackend final : public llm::Backend {
 public:
  const std::string& id() const override { return id_; }
  llm::BackendReply complete(const llm::LlmRequest&) override { throw std::runtime_error("boom"); }

 private:
  std::string id_ = "throwing";
};

class CountingBackend final : public llm::Backend {
 public:
  const std::string& id() const override { return id_; }
  llm::BackendReply complete(const llm::LlmRequest&) override {
    if (calls++ == 0) return {llm::ReplyStatus::TransportError, {}, "reset"};
    return {llm::ReplyStatus::Ok, "敌人在哪", {}};
  }
  std::atomic<int> calls{0};

 private:
  std::string id_ = "counting";
};

TEST(ParseResponse, Examples) {
  EXPECT_EQ(parsed("{前往撤离点}"), "前往撤离点");
  EXPECT_EQ(parsed("  敌人在哪儿\n"), "敌人在哪儿");
  EXPECT_EQ(failure(""), ParseFailure::Empty);
  EXPECT_EQ(failure(" \n\t"), ParseFailure::Empty);
  EXPECT_EQ(failure("{}"), ParseFailure::Empty);
}

TEST(ParseResponse, BracesOnlyWhenWhollyWrapped) {
  EXPECT_EQ(parsed("{a}{b}"), "{a}{b}");
  EXPECT_EQ(parsed("x{a}"), "x{a}");
  EXPECT_EQ(parsed("{ {a} }"), "a");
}

TEST(ParseResponse, TemplateEchoAndLength) {
  EXPECT_EQ(failure("Output Requirements:\n1. Please correct"), ParseFailure::TemplateEcho);
  EXPECT_EQ(failure("ASR 1 Output: DNA在哪"), ParseFailure::TemplateEcho);
  EXPECT_EQ(failure("{Original Text}"), ParseFailure::TemplateEcho);
  EXPECT_EQ(failure("敌人在哪", 3), ParseFailure::TooLong);
  EXPECT_EQ(parsed(std::string(256, 'a')), std::string(256, 'a'));
}

TEST(ParseResponse, Idempotent) {
  Rng rng(12);
  const std::string alphabet = "{} a敌\n";
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const auto len = rng.below(10);
    for (std::size_t k = 0; k < len; ++k) {
      const auto pick = rng.below(6);
      s += pick == 5 ? std::string("敌") : std::string(1, alphabet[pick]);
    }
    const auto once = llm::parse_response(s);
    if (!std::holds_alternative<std::string>(once)) continue;
    const auto twice = llm::parse_response(std::get<std::string>(once));
    ASSERT_TRUE(std::holds_alternative<std::string>(twice)) << s;
    ASSERT_EQ(std::get<std::string>(twice), std::get<std::string>(once)) << s;
  }
}

TEST(Gateway, WrappedModelOutput) {
  const auto r = run(llm::MockBackend::fixed("{哪里遇袭了}"));
  EXPECT_EQ(r.text, "哪里遇袭了");
  EXPECT_EQ(r.origin, llm::Origin::Model);
  EXPECT_TRUE(r.fallback_reason.empty());
}

TEST(Gateway, TimeoutFallsBackToPriority) {
  llm::GatewayConfig config;
  config.fallback_priority = {"ASR-T", "ASR-A"};
  const auto r = run(std::make_shared<llm::MockBackend>(llm::MockBehavior::FailAlways), config);
  EXPECT_EQ(r.origin, llm::Origin::FallbackBestHypothesis);
  EXPECT_EQ(r.text, "敌人在哪");
  EXPECT_FALSE(r.fallback_reason.empty());
}

TEST(Gateway, FallbackWithoutPriorityUsesFirst) {
  llm::GatewayConfig config;
  config.fallback_priority = {"missing"};
  const auto r = run(std::make_shared<llm::MockBackend>(llm::MockBehavior::FailAlways), config);
  EXPECT_EQ(r.text, "DNA在哪");
}

TEST(Gateway, InstructionEchoFallsBack) {
  const auto set = enemy_set();
  const auto spec = prompt::build_prompt(set, {}, 1);
  llm::GatewayConfig config;
  config.fallback_priority = {"ASR-A"};
  config.max_output_chars = 100000;
  const auto r = llm::CorrectionGateway(llm::MockBackend::fixed(spec.rendered), config).correct(spec, set);
  EXPECT_EQ(r.origin, llm::Origin::FallbackBestHypothesis);
  EXPECT_EQ(r.text, "滴哪在哪");
}

TEST(Gateway, ThrowingBackendIsContained) {
  llm::CorrectionResult r;
  EXPECT_NO_THROW(r = run(std::make_shared<ThrowingBackend>()));
  EXPECT_EQ(r.origin, llm::Origin::FallbackBestHypothesis);
  EXPECT_EQ(r.text, "DNA在哪");
}

TEST(Gateway, MalformedBytesAreContained) {
  for (const std::string raw : {std::string("\xff\xfe\x00garbage", 10), std::string("{{{"), std::string("}")}) {
    llm::CorrectionResult r;
    EXPECT_NO_THROW(r = run(llm::MockBackend::fixed(raw)));
    if (r.origin == llm::Origin::Model) {
      EXPECT_FALSE(r.text.empty());
    } else {
      EXPECT_EQ(r.text, "DNA在哪");
    }
  }
}

TEST(Gateway, SingleRetryAfterTransportError) {
  auto backend = std::make_shared<CountingBackend>();
  llm::GatewayConfig config;
  config.retries = 5;  // clamped to one retry
  const auto r = run(backend, config);
  EXPECT_EQ(r.origin, llm::Origin::Model);
  EXPECT_EQ(backend->calls.load(), 2);
}

TEST(MockBackend, KbReplace) {
  const std::vector<kb::TermPair> pairs = {{"敌人", "DNA"}};
  prompt::NBestSet set;
  set.hypotheses = {{"ASR-B", "DNA在哪"}};
  const auto spec = prompt::build_prompt(set, pairs, 1);
  const auto r = llm::CorrectionGateway(std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace))
                     .correct(spec, set);
  EXPECT_EQ(r.text, "敌人在哪");
  EXPECT_EQ(r.origin, llm::Origin::Model);
}

TEST(MockBackend, KbReplaceWithBoundKb) {
  auto k = std::make_shared<kb::KnowledgeBase>();
  k->add("敌人", "DNA");
  EXPECT_EQ(run(std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace, k)).text, "敌人在哪");
}

TEST(MockBackend, EchoIsIdentity) {
  const auto set = enemy_set();
  const auto spec = prompt::build_prompt(set, {}, 1);
  const auto r = llm::CorrectionGateway(std::make_shared<llm::MockBackend>(llm::MockBehavior::Echo)).correct(spec, set);
  EXPECT_EQ(r.text, set.hypotheses[spec.permutation[0]].text);
}

TEST(MockBackend, FailAlwaysTriggersFallback) {
  EXPECT_EQ(run(std::make_shared<llm::MockBackend>(llm::MockBehavior::FailAlways)).origin,
            llm::Origin::FallbackBestHypothesis);
}

TEST(MockBackend, DeterministicAcrossPermutations) {
  auto k = std::make_shared<kb::KnowledgeBase>();
  k->add("敌人", "DNA");
  auto backend = std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace, k);
  const auto set = enemy_set();
  std::set<std::string> outputs;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    outputs.insert(llm::CorrectionGateway(backend).correct(prompt::build_prompt(set, {}, seed), set).text);
  }
  EXPECT_EQ(outputs.size(), 1u);
}

TEST(Medoid, MinimalSumAndTieBreak) {
  EXPECT_EQ(llm::medoid({"abc", "abd", "abe", "xyz"}), 0u);
  EXPECT_EQ(llm::medoid({"b", "a"}), 1u);
  EXPECT_EQ(llm::medoid({"b", "a"}, {"A", "B"}), 0u);
  EXPECT_THROW(llm::medoid({}), InvalidArgument);
}

TEST(ApplyReplacements, LongestMatchFirst) {
  const std::vector<kb::TermPair> pairs = {{"遇袭", "预习"}, {"预习功课", "预习公克"}};
  EXPECT_EQ(llm::apply_kb_replacements("预习公克了预习", pairs), "预习功课了遇袭");
  EXPECT_EQ(llm::apply_kb_replacements("无关", pairs), "无关");
}

TEST(ReadPrompt, RecoversHypothesesAndKb) {
  const std::vector<kb::TermPair> pairs = {{"敌人", "DNA"}, {"遇袭", "预习"}};
  const auto set = enemy_set();
  const auto spec = prompt::build_prompt(set, pairs, 3);
  const auto view = llm::read_prompt(spec.rendered);
  ASSERT_EQ(view.hypotheses.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(view.hypotheses[i], set.hypotheses[spec.permutation[i]].text);
  EXPECT_EQ(view.kb_lines, pairs);
}

TEST(BackendConfig, ParseAndValidate) {
  const auto cfg = llm::parse_backend_config(
      R"({"id":"qwen","base_url":"http://127.0.0.1:9/v1/generate","timeout_ms":500,"max_concurrent":2,"auth_token_env":"TOK"})");
  EXPECT_EQ(cfg.id, "qwen");
  EXPECT_EQ(cfg.timeout.count(), 500);
  EXPECT_EQ(cfg.max_concurrent, 2u);
  EXPECT_THROW(llm::parse_backend_config(R"({"kind":"http"})"), ConfigError);
  EXPECT_THROW(llm::parse_backend_config(R"({"kind":"grpc","base_url":"x"})"), ConfigError);
  EXPECT_THROW(llm::parse_backend_config(R"({"kind":"mock","timeout_ms":0})"), ConfigError);
  EXPECT_THROW(llm::parse_backend_config(R"({"kind":"mock","behavior":"psychic"})"), ConfigError);
  EXPECT_THROW(llm::parse_backend_config("not json"), ConfigError);
  EXPECT_THROW(llm::make_backend(llm::parse_backend_config(R"({"base_url":"ftp://x"})")), ConfigError);
}

// A local model server for the HTTP backend.
class FakeModelServer {
 public:
  FakeModelServer() {
    server_.Post("/simple", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      const auto body = json::parse(req.body);
      const bool ok = !body.at("prompt").get<std::string>().empty();
      res.set_content(json{{"text", ok ? "{敌人在哪}" : ""}}.dump(),
                      "application/json");
    });
    server_.Post("/chat", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const bool ok = body.at("messages").at(0).at("role") == "user";
      res.set_content(json{{"choices", {{{"message", {{"content", ok ? "哪里遇袭了" : ""}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/error", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>", "text/html");
    });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content(R"({"text":"late"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeModelServer() {
    server_.stop();
    thread_.join();
  }

  std::shared_ptr<llm::Backend> backend(const std::string& path, const std::string& protocol = "simple",
                                        int timeout_ms = 2000) const {
    return llm::make_backend(llm::parse_backend_config(
        json{{"id", "fake"},
             {"base_url", "http://127.0.0.1:" + std::to_string(port_) + path},
             {"protocol", protocol},
             {"auth_token_env", "GOAEC_TEST_TOKEN"},
             {"timeout_ms", timeout_ms}}
            .dump()));
  }

  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpBackend, SimpleProtocolWithBearerToken) {
  ::setenv("GOAEC_TEST_TOKEN", "s3cret", 1);
  FakeModelServer server;
  const auto r = run(server.backend("/simple"));
  EXPECT_EQ(r.origin, llm::Origin::Model);
  EXPECT_EQ(r.text, "敌人在哪");
  EXPECT_EQ(server.last_auth, "Bearer s3cret");
  ::unsetenv("GOAEC_TEST_TOKEN");
}

TEST(HttpBackend, ChatProtocol) {
  FakeModelServer server;
  EXPECT_EQ(run(server.backend("/chat", "chat")).text, "哪里遇袭了");
}

TEST(HttpBackend, FailuresFallBack) {
  FakeModelServer server;
  for (const char* path : {"/error", "/garbage", "/missing"}) {
    const auto r = run(server.backend(path));
    EXPECT_EQ(r.origin, llm::Origin::FallbackBestHypothesis) << path;
    EXPECT_EQ(r.text, "DNA在哪");
  }
}

TEST(HttpBackend, TimeoutIsReported) {
  FakeModelServer server;
  auto backend = server.backend("/slow", "simple", 200);
  const auto reply = backend->complete({"p", 256, llm::Millis(200), "fake"});
  EXPECT_EQ(reply.status, llm::ReplyStatus::Timeout);
}

TEST(HttpBackend, UnreachableIsTransportError) {
  const auto backend = llm::make_backend(llm::parse_backend_config(
      R"({"base_url":"http://127.0.0.1:1/v1","timeout_ms":300})"));
  const auto r = run(backend);
  EXPECT_EQ(r.origin, llm::Origin::FallbackBestHypothesis);
}

}  // namespace
