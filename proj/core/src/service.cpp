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

#include "goaec/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <deque>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "goaec/error.hpp"
#include "goaec/hash.hpp"

namespace goaec::service {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ServiceConfig parse_service_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.empty() || path.is_absolute() ? path : base_dir / path;
  };
  try {
    const json j = json::parse(json_text);
    cfg.bind_address = j.value("bind_address", cfg.bind_address);
    cfg.port = j.value("port", cfg.port);
    cfg.backend_config = resolve(j.value("backend_config", std::string()));
    cfg.kb_path = resolve(j.value("kb_path", std::string()));
    cfg.persist_kb = j.value("persist_kb", cfg.persist_kb);
    cfg.k_max = j.value("k_max", cfg.k_max);
    cfg.max_kb_lines = j.value("max_kb_lines", cfg.max_kb_lines);
    cfg.fallback_priority = j.value("fallback_priority", cfg.fallback_priority);
    cfg.fallback_enabled = j.value("fallback_enabled", cfg.fallback_enabled);
    cfg.timeout = llm::Millis(j.value("timeout_ms", static_cast<long long>(cfg.timeout.count())));
    cfg.retries = j.value("retries", cfg.retries);
    cfg.auth_token_env = j.value("auth_token_env", cfg.auth_token_env);
    cfg.feedback_log = resolve(j.value("feedback_log", std::string()));
    cfg.auto_insert = j.value("auto_insert", cfg.auto_insert);
    cfg.auto_insert_min_support = j.value("auto_insert_min_support", cfg.auto_insert_min_support);
    cfg.mine_max_span = j.value("mine_max_span", cfg.mine_max_span);
    cfg.served_capacity = j.value("served_capacity", cfg.served_capacity);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("service config: ") + e.what());
  }
  if (cfg.port < 0 || cfg.port > 65535) throw ConfigError("service config: port out of range");
  if (cfg.k_max == 0) throw ConfigError("service config: k_max must be positive");
  if (cfg.timeout.count() <= 0) throw ConfigError("service config: timeout_ms must be positive");
  if (cfg.retries < 0 || cfg.retries > 1) throw ConfigError("service config: retries must be 0 or 1");
  if (cfg.auto_insert_min_support == 0) throw ConfigError("service config: auto_insert_min_support must be positive");
  if (cfg.persist_kb && cfg.kb_path.empty()) throw ConfigError("service config: persist_kb needs kb_path");
  return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open service config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_service_config(ss.str(), path.parent_path());
}

namespace {

Reply json_reply(int status, const ordered_json& body) {
  return {status, body.dump(-1, ' ', false, ordered_json::error_handler_t::replace)};
}

Reply error_reply(int status, std::string_view message) {
  return json_reply(status, {{"error", message}});
}

ordered_json pairs_json(const std::vector<kb::TermPair>& pairs) {
  ordered_json out = ordered_json::array();
  for (const auto& p : pairs) out.push_back({{"correct", p.correct}, {"erroneous", p.erroneous}});
  return out;
}

struct Served {
  std::vector<prompt::Hypothesis> hypotheses;
  std::string context;
  std::string corrected;
};

kb::TermPair parse_pair(std::string_view body) {
  const json j = json::parse(body);
  return {j.at("correct").get<std::string>(), j.at("erroneous").get<std::string>()};
}

}  // namespace

struct CorrectionService::Impl {
  Impl(const ServiceConfig& config, std::shared_ptr<llm::Backend> backend, kb::KnowledgeBase initial)
      : store(std::move(initial)),
        gateway(std::move(backend), llm::GatewayConfig{256, config.timeout, config.fallback_priority,
                                                        config.retries}) {
    prompt_options.max_kb_lines = config.max_kb_lines;
    if (!config.auth_token_env.empty()) {
      const char* token = std::getenv(config.auth_token_env.c_str());
      if (!token || !*token) {
        throw ConfigError("auth token env var " + config.auth_token_env + " is not set");
      }
      auth_token = token;
    }
    if (!config.feedback_log.empty()) {
      feedback_out.open(config.feedback_log, std::ios::binary | std::ios::app);
      if (!feedback_out) throw ConfigError("cannot open feedback log " + config.feedback_log.string());
    }
  }

  bool authorized(std::string_view header) const {
    return auth_token.empty() || header == "Bearer " + auth_token;
  }

  void remember(const std::string& id, Served served, std::size_t capacity) {
    std::lock_guard lock(served_mu);
    auto [it, inserted] = served_by_id.insert_or_assign(id, std::move(served));
    if (inserted) {
      served_order.push_back(id);
      while (served_order.size() > capacity) {
        served_by_id.erase(served_order.front());
        served_order.pop_front();
      }
    }
  }

  void persist(const ServiceConfig& config) {
    if (!config.persist_kb) return;
    std::lock_guard lock(persist_mu);
    kb::save_kb(*store.snapshot(), config.kb_path);
  }

  kb::KbStore store;
  llm::CorrectionGateway gateway;
  prompt::PromptOptions prompt_options;
  std::string auth_token;

  mutable std::mutex served_mu;
  std::unordered_map<std::string, Served> served_by_id;
  std::deque<std::string> served_order;

  mutable std::mutex feedback_mu;
  std::ofstream feedback_out;
  std::set<std::string> feedback_ids;
  std::vector<std::string> feedback_lines;
  std::map<kb::TermPair, std::set<std::string>> runtime_support;

  std::mutex persist_mu;

  httplib::Server server;
  std::thread server_thread;
};

CorrectionService::CorrectionService(ServiceConfig config, std::shared_ptr<llm::Backend> backend,
                                     kb::KnowledgeBase initial)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_, std::move(backend), std::move(initial))) {
  auto reply = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  auto& server = impl_->server;
  server.set_payload_max_length(1 << 20);
  server.Post("/v1/correct", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, correct(req.body));
  });
  server.Post("/v1/kb/entries", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, kb_add(req.body, req.get_header_value("Authorization")));
  });
  server.Get("/v1/kb/entries", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, kb_list(req.get_header_value("Authorization")));
  });
  server.Delete("/v1/kb/entries", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, kb_remove(req.body, req.get_header_value("Authorization")));
  });
  server.Post("/v1/feedback", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, feedback(req.body));
  });
  server.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, health());
  });
}

CorrectionService::~CorrectionService() { stop(); }

kb::KbStore& CorrectionService::kb() noexcept { return impl_->store; }

Reply CorrectionService::correct(std::string_view body) const {
  prompt::NBestSet nbest;
  bool has_id = false;
  try {
    const json j = json::parse(body);
    const json& hyps = j.at("hypotheses");
    if (!hyps.is_array()) return error_reply(400, "hypotheses must be an array");
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      if (hyps[i].is_string()) {
        nbest.hypotheses.push_back({"asr" + std::to_string(i + 1), hyps[i].get<std::string>()});
      } else {
        nbest.hypotheses.push_back({hyps[i].at("source_id").get<std::string>(), hyps[i].at("text").get<std::string>()});
      }
    }
    nbest.context = j.value("context", std::string());
    if (j.contains("utterance_id") && !j.at("utterance_id").is_null()) {
      nbest.utterance_id = j.at("utterance_id").get<std::string>();
      has_id = !nbest.utterance_id.empty();
    }
    nbest.validate(config_.k_max);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed request: ") + e.what());
  } catch (const InvalidArgument& e) {
    return error_reply(400, e.what());
  }

  const std::uint64_t seed = has_id ? prompt::seed_for_utterance(nbest.utterance_id) : fnv1a64(body);
  if (!has_id) nbest.utterance_id = "req-" + to_hex(fnv1a64(body));

  const auto snapshot = impl_->store.snapshot();
  const std::vector<std::string> texts = nbest.texts();
  const std::vector<kb::TermPair> hits = snapshot->retrieve(texts);
  const prompt::PromptSpec spec =
      prompt::build_prompt(nbest, hits, seed, prompt::default_template(), impl_->prompt_options);
  const llm::CorrectionResult result = impl_->gateway.correct(spec, nbest);

  const bool fell_back = result.origin == llm::Origin::FallbackBestHypothesis;
  spdlog::info("correct utterance={} origin={} kb_hits={} revision={} latency_ms={}", nbest.utterance_id,
               llm::to_string(result.origin), hits.size(), snapshot->revision(), result.latency.count());
  if (fell_back && !config_.fallback_enabled) {
    return error_reply(503, "correction backend unavailable");
  }
  impl_->remember(nbest.utterance_id, {nbest.hypotheses, nbest.context, result.text}, config_.served_capacity);

  ordered_json out;
  out["utterance_id"] = nbest.utterance_id;
  out["corrected"] = result.text;
  out["origin"] = fell_back ? "fallback" : "model";
  out["kb_hits"] = pairs_json(hits);
  out["revision"] = snapshot->revision();
  out["latency_ms"] = result.latency.count();
  out["prompt_seed"] = to_hex(seed);
  return json_reply(200, out);
}

Reply CorrectionService::kb_add(std::string_view body, std::string_view authorization) {
  if (!impl_->authorized(authorization)) return error_reply(401, "missing or invalid bearer token");
  kb::TermPair pair;
  std::uint64_t count = 1;
  try {
    pair = parse_pair(body);
    count = json::parse(body).value("count", std::uint64_t{1});
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed request: ") + e.what());
  }
  if (pair.correct == pair.erroneous) return error_reply(409, "correct and erroneous strings are equal");
  std::uint64_t revision = 0;
  try {
    revision = impl_->store.add(pair.correct, pair.erroneous, kb::VariantSource::Runtime, count);
  } catch (const InvalidArgument& e) {
    return error_reply(400, e.what());
  }
  impl_->persist(config_);
  spdlog::info("kb add revision={}", revision);
  return json_reply(200, {{"revision", revision}});
}

Reply CorrectionService::kb_list(std::string_view authorization) const {
  if (!impl_->authorized(authorization)) return error_reply(401, "missing or invalid bearer token");
  const auto snapshot = impl_->store.snapshot();
  ordered_json entries = ordered_json::array();
  for (const auto& [correct, entry] : snapshot->entries()) {
    for (const auto& [erroneous, variant] : entry.variants) {
      entries.push_back({{"correct", correct},
                         {"erroneous", erroneous},
                         {"count", variant.count},
                         {"source", kb::to_string(variant.source)}});
    }
  }
  ordered_json out;
  out["revision"] = snapshot->revision();
  out["entries"] = std::move(entries);
  return json_reply(200, out);
}

Reply CorrectionService::kb_remove(std::string_view body, std::string_view authorization) {
  if (!impl_->authorized(authorization)) return error_reply(401, "missing or invalid bearer token");
  kb::TermPair pair;
  try {
    pair = parse_pair(body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed request: ") + e.what());
  }
  std::uint64_t revision = 0;
  try {
    revision = impl_->store.remove(pair.correct, pair.erroneous);
  } catch (const NotFound& e) {
    return error_reply(404, e.what());
  }
  impl_->persist(config_);
  spdlog::info("kb remove revision={}", revision);
  return json_reply(200, {{"revision", revision}});
}

Reply CorrectionService::feedback(std::string_view body) {
  std::string id;
  std::string final_text;
  bool accepted = false;
  try {
    const json j = json::parse(body);
    id = j.at("utterance_id").get<std::string>();
    final_text = j.at("final_text").get<std::string>();
    accepted = j.at("accepted").get<bool>();
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed request: ") + e.what());
  }
  if (final_text.empty()) return error_reply(400, "final_text is empty");

  Served served;
  {
    std::lock_guard lock(impl_->served_mu);
    const auto it = impl_->served_by_id.find(id);
    if (it == impl_->served_by_id.end()) return error_reply(404, "unknown utterance_id");
    served = it->second;
  }

  std::lock_guard lock(impl_->feedback_mu);
  if (!impl_->feedback_ids.insert(id).second) {
    return json_reply(200, {{"logged", true}, {"duplicate", true}});
  }
  ordered_json row;
  row["utterance_id"] = id;
  ordered_json hyps = ordered_json::array();
  for (const auto& h : served.hypotheses) hyps.push_back({{"source_id", h.source_id}, {"text", h.text}});
  row["hypotheses"] = std::move(hyps);
  row["context"] = served.context;
  row["corrected"] = served.corrected;
  row["final_text"] = final_text;
  row["accepted"] = accepted;
  std::string line = row.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
  if (impl_->feedback_out.is_open()) {
    impl_->feedback_out << line << '\n';
    impl_->feedback_out.flush();
  }
  impl_->feedback_lines.push_back(std::move(line));

  if (config_.auto_insert) {
    const auto ref = metrics::normalize(final_text);
    for (const auto& h : served.hypotheses) {
      for (const auto& m : kb::mine_pairs(metrics::normalize(h.text), ref, config_.mine_max_span, id)) {
        kb::TermPair pair{m.correct_span, m.error_span};
        auto& support = impl_->runtime_support[pair];
        support.insert(id);
        if (support.size() < config_.auto_insert_min_support) continue;
        if (impl_->store.snapshot()->contains(pair.correct, pair.erroneous)) continue;
        try {
          const auto revision = impl_->store.add(pair.correct, pair.erroneous, kb::VariantSource::Runtime,
                                                 support.size());
          impl_->persist(config_);
          spdlog::info("kb auto-insert revision={}", revision);
        } catch (const InvalidArgument&) {
          // Span past the KB length bound; leave it to operator review.
        }
      }
    }
  }
  return json_reply(200, {{"logged", true}});
}

Reply CorrectionService::health() const {
  ordered_json out;
  out["status"] = "ok";
  out["kb_revision"] = impl_->store.snapshot()->revision();
  out["backend_id"] = impl_->gateway.backend().id();
  return json_reply(200, out);
}

std::vector<std::string> CorrectionService::feedback_lines() const {
  std::lock_guard lock(impl_->feedback_mu);
  return impl_->feedback_lines;
}

int CorrectionService::start() {
  auto& server = impl_->server;
  int port = config_.port;
  if (port == 0) {
    port = server.bind_to_any_port(config_.bind_address);
    if (port < 0) throw ConfigError("cannot bind " + config_.bind_address);
  } else if (!server.bind_to_port(config_.bind_address, port)) {
    throw ConfigError("cannot bind " + config_.bind_address + ":" + std::to_string(port));
  }
  impl_->server_thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  spdlog::info("serving on {}:{}", config_.bind_address, port);
  return port;
}

void CorrectionService::run() {
  start();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void CorrectionService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable() && impl_->server_thread.get_id() != std::this_thread::get_id()) {
    impl_->server_thread.join();
  }
}

std::unique_ptr<CorrectionService> make_service(const ServiceConfig& config) {
  if (config.backend_config.empty()) throw ConfigError("service config: backend_config is required");
  auto backend = llm::make_backend(llm::load_backend_config(config.backend_config));
  kb::KnowledgeBase initial;
  if (!config.kb_path.empty() && std::filesystem::exists(config.kb_path)) initial = kb::load_kb(config.kb_path);
  return std::make_unique<CorrectionService>(config, std::move(backend), std::move(initial));
}

std::vector<corpus::UtteranceRecord> read_feedback_log(std::istream& in, const std::string& source_name) {
  std::vector<corpus::UtteranceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      corpus::UtteranceRecord r;
      r.id = j.at("utterance_id").get<std::string>();
      r.reference = j.at("final_text").get<std::string>();
      r.context = j.value("context", std::string());
      for (const json& h : j.at("hypotheses")) {
        r.hypotheses.push_back({h.at("source_id").get<std::string>(), h.at("text").get<std::string>()});
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return out;
}

}  // namespace goaec::service
