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

#include "goaec/harness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "goaec/error.hpp"
#include "goaec/hash.hpp"

namespace goaec::harness {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Runs fn(i) for i in [0, n) on a small pool; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::shared_ptr<llm::Backend> backend_from(const json& j, const std::filesystem::path& base,
                                           std::vector<std::string>* parts) {
  std::string text;
  if (j.is_string()) {
    text = read_text(resolve(base, j.get<std::string>()));
  } else {
    text = j.dump();
  }
  if (parts) parts->push_back(text);
  return llm::make_backend(llm::parse_backend_config(text));
}

}  // namespace

// ---------------------------------------------------------------------------

MethodSpec MethodSpec::parse(std::string_view text) {
  auto after = [&](std::string_view prefix) { return std::string(text.substr(prefix.size())); };
  MethodSpec m;
  if (text.starts_with("vanilla:") && text.size() > 8) {
    m.kind = Kind::Vanilla;
    m.arg = after("vanilla:");
  } else if (text == "pipeline") {
    m.kind = Kind::Pipeline;
  } else if (text.starts_with("pipeline-no-nbest:") && text.size() > 18) {
    m.kind = Kind::PipelineNoNbest;
    m.arg = after("pipeline-no-nbest:");
  } else if (text == "pipeline-no-rag") {
    m.kind = Kind::PipelineNoRag;
  } else if (text.starts_with("pipeline:") && text.size() > 9) {
    m.kind = Kind::Pipeline;
    m.arg = after("pipeline:");
  } else {
    throw ConfigError("unknown method \"" + std::string(text) + "\"");
  }
  return m;
}

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::Vanilla:
      return "vanilla:" + arg;
    case Kind::Pipeline:
      return arg.empty() ? "pipeline" : "pipeline:" + arg;
    case Kind::PipelineNoRag:
      return "pipeline-no-rag";
    case Kind::PipelineNoNbest:
      return "pipeline-no-nbest:" + arg;
  }
  return {};
}

MethodResult run_method(std::span<const corpus::UtteranceRecord> records, const MethodSpec& method,
                        const EvalSetup& setup) {
  MethodResult result;
  result.method = method;
  result.outputs.resize(records.size());

  const bool single = method.kind == MethodSpec::Kind::Vanilla || method.kind == MethodSpec::Kind::PipelineNoNbest;
  if (single) {
    for (const auto& r : records) {
      if (!r.nbest().find(method.arg)) {
        throw DataError("utterance \"" + r.id + "\" has no hypothesis from source \"" + method.arg + "\"");
      }
    }
  }

  const Pipeline* pipeline = &setup.pipeline;
  if (method.kind == MethodSpec::Kind::Pipeline && !method.arg.empty()) {
    const auto it = setup.named.find(method.arg);
    if (it == setup.named.end()) throw ConfigError("no pipeline named \"" + method.arg + "\"");
    pipeline = &it->second;
  }

  if (method.kind == MethodSpec::Kind::Vanilla) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      result.outputs[i] = {records[i].id, records[i].nbest().find(method.arg)->text, false};
    }
  } else {
    if (!pipeline->backend) throw ConfigError("pipeline has no backend");
    const llm::CorrectionGateway gateway(pipeline->backend, pipeline->gateway);
    parallel_for(records.size(), setup.threads, [&](std::size_t i) {
      const auto& r = records[i];
      prompt::NBestSet nbest = r.nbest();
      if (method.kind == MethodSpec::Kind::PipelineNoNbest) {
        nbest.hypotheses = {*nbest.find(method.arg)};
      }
      std::vector<kb::TermPair> hits;
      if (method.kind != MethodSpec::Kind::PipelineNoRag) hits = pipeline->kb.retrieve(nbest.texts());
      const std::uint64_t seed = setup.seed == 0 ? prompt::seed_for_utterance(r.id)
                                                 : hash_fields(std::to_string(setup.seed), r.id);
      const auto spec = prompt::build_prompt(nbest, hits, seed, prompt::default_template(), pipeline->prompt);
      const auto corrected = gateway.correct(spec, nbest);
      result.outputs[i] = {r.id, corrected.text, corrected.origin == llm::Origin::FallbackBestHypothesis};
    });
  }

  std::vector<std::pair<std::string, std::string>> scored;
  scored.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    scored.emplace_back(result.outputs[i].corrected, records[i].reference);
    if (result.outputs[i].fallback) ++result.fallbacks;
  }
  result.score = metrics::score_corpus(std::span<const std::pair<std::string, std::string>>(scored), true);
  return result;
}

// ---------------------------------------------------------------------------

std::string EvalReport::to_json() const {
  ordered_json j;
  j["corpus_id"] = corpus_id;
  j["config_fingerprint"] = config_fingerprint;
  ordered_json rows_json = ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"method", r.method},
                         {"cer", r.cer},
                         {"ser", r.ser},
                         {"sentences", r.sentences},
                         {"ref_chars", r.ref_chars},
                         {"fallbacks", r.fallbacks}});
  }
  j["rows"] = std::move(rows_json);
  return j.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

EvalReport EvalReport::from_json(std::string_view text) {
  EvalReport report;
  try {
    const json j = json::parse(text);
    report.corpus_id = j.at("corpus_id").get<std::string>();
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    for (const json& r : j.at("rows")) {
      report.rows.push_back({r.at("method").get<std::string>(), r.at("cer").get<double>(),
                             r.at("ser").get<double>(), r.value("sentences", std::size_t{0}),
                             r.value("ref_chars", std::size_t{0}), r.value("fallbacks", std::size_t{0})});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: ") + e.what());
  }
  return report;
}

std::string EvalReport::table() const {
  std::size_t width = std::string_view("Method").size();
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::string out;
  char buf[64];
  auto line = [&](std::string_view method, std::string_view cer, std::string_view ser) {
    out += std::string(method) + std::string(width - method.size(), ' ') + " | ";
    std::snprintf(buf, sizeof buf, "%6s | %6s\n", std::string(cer).c_str(), std::string(ser).c_str());
    out += buf;
  };
  out += "# corpus " + corpus_id + ", config " + config_fingerprint + "\n";
  line("Method", "CER", "SER");
  for (const auto& r : rows) {
    char cer[32];
    char ser[32];
    std::snprintf(cer, sizeof cer, "%.2f", r.cer);
    std::snprintf(ser, sizeof ser, "%.2f", r.ser);
    line(r.method, cer, ser);
  }
  return out;
}

EvalReport evaluate(std::span<const corpus::UtteranceRecord> records, std::span<const MethodSpec> methods,
                    const EvalSetup& setup, std::string corpus_id, std::string fingerprint,
                    std::vector<MethodResult>* details) {
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (!names.insert(m.name()).second) throw ConfigError("method \"" + m.name() + "\" listed twice");
  }
  if (records.empty()) throw DataError("corpus is empty");
  EvalReport report;
  report.corpus_id = std::move(corpus_id);
  report.config_fingerprint = std::move(fingerprint);
  for (const auto& m : methods) {
    MethodResult result = run_method(records, m, setup);
    report.rows.push_back({m.name(), result.score.cer, result.score.ser, result.score.sentence_total,
                           result.score.total_ref_chars, result.fallbacks});
    if (details) details->push_back(std::move(result));
  }
  return report;
}

void write_eval_outputs(const EvalReport& report, std::span<const MethodResult> details,
                        std::span<const corpus::UtteranceRecord> records, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "corrected");
  corpus::write_file_atomic(out_dir / "report.json", report.to_json());
  corpus::write_file_atomic(out_dir / "report.txt", report.table());
  for (const auto& d : details) {
    std::string name = d.method.name();
    std::replace_if(name.begin(), name.end(), [](char c) { return c == ':' || c == '/' || c == '\\'; }, '_');
    std::ostringstream out;
    for (std::size_t i = 0; i < d.outputs.size(); ++i) {
      ordered_json row;
      row["id"] = d.outputs[i].id;
      row["reference"] = records[i].reference;
      row["corrected"] = d.outputs[i].corrected;
      row["origin"] = d.outputs[i].fallback ? "fallback" : "model";
      out << row.dump(-1, ' ', false, ordered_json::error_handler_t::replace) << '\n';
    }
    corpus::write_file_atomic(out_dir / "corrected" / (name + ".jsonl"), out.str());
  }
}

std::string config_fingerprint(std::span<const std::string> parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : parts) {
    h = fnv1a64(std::to_string(p.size()), h);
    h = fnv1a64(":", h);
    h = fnv1a64(p, h);
  }
  return to_hex(h);
}

std::string corpus_id_for(const std::filesystem::path& path, std::string_view bytes) {
  return path.filename().string() + "@" + to_hex(fnv1a64(bytes));
}

namespace {

Pipeline pipeline_from(const json& j, const std::filesystem::path& base, std::vector<std::string>* parts) {
  Pipeline p;
  p.backend = j.contains("backend") ? backend_from(j.at("backend"), base, parts)
                                    : std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace);
  if (j.contains("kb")) {
    const auto path = resolve(base, j.at("kb").get<std::string>());
    const std::string bytes = read_text(path);
    if (parts) parts->push_back(bytes);
    std::istringstream in(bytes);
    p.kb = kb::load_kb(in, path.string(), j.value("max_span", kb::KnowledgeBase::kDefaultMaxSpanChars));
  }
  p.gateway.fallback_priority = j.value("fallback_priority", p.gateway.fallback_priority);
  p.gateway.timeout = llm::Millis(j.value("timeout_ms", static_cast<long long>(p.gateway.timeout.count())));
  p.gateway.retries = j.value("retries", p.gateway.retries);
  p.gateway.max_output_chars = j.value("max_output_chars", p.gateway.max_output_chars);
  p.prompt.max_kb_lines = j.value("max_kb_lines", p.prompt.max_kb_lines);
  return p;
}

}  // namespace

EvalSetup parse_eval_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            std::vector<std::string>* parts) {
  EvalSetup setup;
  try {
    const json j = json::parse(json_text);
    setup.pipeline = pipeline_from(j, base_dir, parts);
    setup.threads = j.value("threads", setup.threads);
    if (j.contains("pipelines")) {
      for (const auto& [name, sub] : j.at("pipelines").items()) {
        setup.named.emplace(name, pipeline_from(sub, base_dir, parts));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("eval config: ") + e.what());
  }
  return setup;
}

// ---------------------------------------------------------------------------

MineSummary mine_corpus(std::span<const corpus::UtteranceRecord> records, const MineOptions& options) {
  if (options.min_support == 0) throw InvalidArgument("min_support must be positive");
  std::vector<kb::MinedPair> mined;
  std::vector<std::string> references;
  for (const auto& r : records) {
    if (r.reference.empty()) throw DataError("utterance \"" + r.id + "\" has no reference");
    const auto ref = metrics::normalize(r.reference, options.strip_punctuation);
    references.push_back(ref.utf8());
    for (const auto& h : r.hypotheses) {
      auto pairs = kb::mine_pairs(metrics::normalize(h.text, options.strip_punctuation), ref, options.max_span, r.id);
      mined.insert(mined.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
    }
  }
  MineSummary summary;
  summary.mined = mined.size();
  auto support = kb::aggregate_mined(mined);
  summary.candidates = support.size();
  if (options.drop_ambiguous) {
    std::erase_if(support, [&](const kb::PairSupport& s) {
      const bool ambiguous = std::any_of(references.begin(), references.end(), [&](const std::string& ref) {
        return ref.find(s.pair.erroneous) != std::string::npos;
      });
      summary.ambiguous += ambiguous;
      return ambiguous;
    });
  }
  summary.kb = kb::build_from_mined(support, options.min_support, options.max_span);
  summary.kept = summary.kb.pair_count();
  return summary;
}

// ---------------------------------------------------------------------------

SimulateSummary simulate_corpus(const corpus::TextCorpus& texts, std::span<const sim::ChannelProfile> profiles) {
  texts.validate();
  SimulateSummary summary;
  summary.records.reserve(texts.items.size());
  for (const auto& item : texts.items) {
    const auto nbest = sim::simulate_nbest(item.text, profiles, item.context, item.id);
    summary.records.push_back({item.id, item.text, nbest.hypotheses, item.context, std::nullopt});
  }
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& r : summary.records) pairs.emplace_back(r.hypotheses[p].text, r.reference);
    summary.per_source.emplace_back(
        profiles[p].source_id,
        metrics::score_corpus(std::span<const std::pair<std::string, std::string>>(pairs), true));
  }
  return summary;
}

// ---------------------------------------------------------------------------

std::size_t export_sft_corpus(std::span<const corpus::UtteranceRecord> records, const kb::KnowledgeBase& kb,
                              std::ostream& out, const SftOptions& options) {
  std::vector<prompt::SftRecord> sft;
  sft.reserve(records.size());
  for (const auto& r : records) {
    prompt::SftRecord s{r.nbest(), {}, r.reference};
    if (options.include_kb) s.kb_pairs = kb.retrieve(s.nbest.texts());
    sft.push_back(std::move(s));
  }
  try {
    return prompt::export_sft(sft, out, prompt::default_template(), options.prompt);
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
}

// ---------------------------------------------------------------------------

AugmentSummary run_augment(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                           std::uint64_t seed) {
  const auto base = config_path.parent_path();
  json j;
  try {
    j = json::parse(read_text(config_path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("augment config: ") + e.what());
  }

  AugmentSummary summary;
  corpus::TextCorpus texts;
  std::vector<augment::VoiceProfile> voices;
  std::vector<augment::NoiseSpec> noises;
  std::vector<corpus::UtteranceRecord> real;
  std::shared_ptr<augment::TtsBackend> tts;
  augment::BuildOptions options;
  options.out_dir = out_dir;
  try {
    texts = corpus::read_text_corpus(resolve(base, j.at("texts").get<std::string>()));
    for (const json& v : j.at("voices")) {
      voices.push_back({v.at("voice_id").get<std::string>(), v.value("rate_factor", 1.0), v.value("volume_db", 0.0)});
    }
    if (j.contains("noise_catalog")) {
      noises = augment::load_noise_catalog(resolve(base, j.at("noise_catalog").get<std::string>()));
    }
    if (j.contains("real")) real = corpus::read_corpus(resolve(base, j.at("real").get<std::string>()));
    tts = augment::make_tts(j.contains("tts") ? j.at("tts").dump() : std::string("{}"));
    options.samples_per_text = j.value("samples_per_text", options.samples_per_text);
    options.threads = j.value("threads", options.threads);
    if (j.contains("split")) {
      const json& s = j.at("split");
      options.split = {s.value("train", 0.8), s.value("validation", 0.1), s.value("test", 0.1)};
    }
    if (j.contains("expand")) {
      const json& e = j.at("expand");
      auto backend = backend_from(e.at("backend"), base, nullptr);
      auto expanded = augment::expand_texts(texts, *backend, e.at("target_count").get<std::size_t>());
      summary.expanded = expanded.added;
      summary.warning = expanded.warning;
      texts = std::move(expanded.corpus);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("augment config: ") + e.what());
  }
  for (const auto& v : voices) {
    try {
      v.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  std::filesystem::create_directories(out_dir);
  const auto manifest = augment::build_dataset(texts, voices, noises, real, seed, *tts, options);
  std::ostringstream manifest_out;
  augment::write_manifest(manifest, manifest_out);
  corpus::write_file_atomic(out_dir / "manifest.jsonl", manifest_out.str());
  std::ostringstream texts_out;
  corpus::write_text_corpus(texts, texts_out);
  corpus::write_file_atomic(out_dir / "texts.jsonl", texts_out.str());

  summary.texts = texts.items.size();
  summary.rows = manifest.rows.size();
  summary.clipped_samples = manifest.clipped_samples;
  return summary;
}

}  // namespace goaec::harness
