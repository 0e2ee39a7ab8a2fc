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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "goaec/asr_sim.hpp"
#include "goaec/augment.hpp"
#include "goaec/corpus.hpp"
#include "goaec/gateway.hpp"
#include "goaec/kb.hpp"
#include "goaec/metrics.hpp"
#include "goaec/promptgen.hpp"

// Operator jobs behind the command-line tool.
namespace goaec::harness {

// ---------------------------------------------------------------------------
// Evaluation

struct MethodSpec {
  enum class Kind { Vanilla, Pipeline, PipelineNoRag, PipelineNoNbest };
  Kind kind = Kind::Pipeline;
  // Source id for Vanilla and PipelineNoNbest; pipeline name for Pipeline
  // (empty: the default pipeline).
  std::string arg;

  // vanilla:<source>, pipeline, pipeline:<name>, pipeline-no-rag,
  // pipeline-no-nbest:<source>. Throws ConfigError otherwise.
  static MethodSpec parse(std::string_view text);
  std::string name() const;
};

// A correction setup: backend, KB and prompt/gateway options.
struct Pipeline {
  std::shared_ptr<llm::Backend> backend;
  kb::KnowledgeBase kb;
  llm::GatewayConfig gateway;
  prompt::PromptOptions prompt;
};

struct EvalSetup {
  Pipeline pipeline;                       // "pipeline", the ablations
  std::map<std::string, Pipeline> named;   // "pipeline:<name>"
  std::uint64_t seed = 0;                  // 0: prompt seed is hash(utterance id)
  std::size_t threads = 0;                 // 0: hardware concurrency
};

struct CorrectedText {
  std::string id;
  std::string corrected;
  bool fallback = false;
};

struct MethodResult {
  MethodSpec method;
  std::vector<CorrectedText> outputs;  // corpus order
  metrics::CorpusScore score;
  std::size_t fallbacks = 0;
};

// Runs one method over the corpus. Throws DataError when a record lacks the
// requested source.
MethodResult run_method(std::span<const corpus::UtteranceRecord> records, const MethodSpec& method,
                        const EvalSetup& setup);

struct EvalRow {
  std::string method;
  double cer = 0.0;
  double ser = 0.0;
  std::size_t sentences = 0;
  std::size_t ref_chars = 0;
  std::size_t fallbacks = 0;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string corpus_id;
  std::string config_fingerprint;

  std::string to_json() const;
  static EvalReport from_json(std::string_view text);
  // "Method | CER | SER" with percentages to two decimals.
  std::string table() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Throws ConfigError on duplicate method names.
EvalReport evaluate(std::span<const corpus::UtteranceRecord> records, std::span<const MethodSpec> methods,
                    const EvalSetup& setup, std::string corpus_id, std::string config_fingerprint,
                    std::vector<MethodResult>* details = nullptr);

// Writes report.json, report.txt and corrected/<method>.jsonl under out_dir.
void write_eval_outputs(const EvalReport& report, std::span<const MethodResult> details,
                        std::span<const corpus::UtteranceRecord> records, const std::filesystem::path& out_dir);

// Stable hash of every config byte that influences a run.
std::string config_fingerprint(std::span<const std::string> parts);

// "<file name>@<hash of the bytes>".
std::string corpus_id_for(const std::filesystem::path& path, std::string_view bytes);

// Eval config JSON:
//   {"backend": <backend config object or path>, "kb": "kb.txt",
//    "fallback_priority": [...], "max_kb_lines": 20, "timeout_ms": 10000,
//    "retries": 0, "threads": 0, "pipelines": {"name": {same keys}}}
// Missing backend: mock kb-replace. Paths relative to base_dir. The file
// bytes it references are appended to `fingerprint_parts`.
EvalSetup parse_eval_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            std::vector<std::string>* fingerprint_parts = nullptr);

// ---------------------------------------------------------------------------
// Mining

struct MineOptions {
  std::size_t max_span = 3;
  std::size_t min_support = 2;
  bool strip_punctuation = true;
  // Drops pairs whose erroneous span also occurs in some reference of the
  // corpus; replacing it would damage correct text.
  bool drop_ambiguous = true;
};

struct MineSummary {
  kb::KnowledgeBase kb;
  std::size_t mined = 0;       // raw pair occurrences
  std::size_t candidates = 0;  // distinct pairs before the support filter
  std::size_t ambiguous = 0;   // dropped by drop_ambiguous
  std::size_t kept = 0;
};

// Throws DataError when a record has no reference.
MineSummary mine_corpus(std::span<const corpus::UtteranceRecord> records, const MineOptions& options);

// ---------------------------------------------------------------------------
// Simulation

struct SimulateSummary {
  std::vector<corpus::UtteranceRecord> records;
  // Per-source vanilla score, in profile order.
  std::vector<std::pair<std::string, metrics::CorpusScore>> per_source;
};

SimulateSummary simulate_corpus(const corpus::TextCorpus& texts, std::span<const sim::ChannelProfile> profiles);

// ---------------------------------------------------------------------------
// SFT export

struct SftOptions {
  bool include_kb = true;
  prompt::PromptOptions prompt;
};

std::size_t export_sft_corpus(std::span<const corpus::UtteranceRecord> records, const kb::KnowledgeBase& kb,
                              std::ostream& out, const SftOptions& options = {});

// ---------------------------------------------------------------------------
// Augmentation job
//
// Config JSON:
//   {"texts": "seed.jsonl", "voices": [{"voice_id", "rate_factor",
//    "volume_db"}], "noise_catalog": "noises.json", "real": "real.jsonl",
//    "tts": {"kind": "mock", ...}, "samples_per_text": 1,
//    "split": {"train", "validation", "test"}, "threads": 0,
//    "expand": {"backend": <backend config>, "target_count": N}}

struct AugmentSummary {
  std::size_t texts = 0;
  std::size_t expanded = 0;
  std::size_t rows = 0;
  std::size_t clipped_samples = 0;
  std::string warning;
};

AugmentSummary run_augment(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                           std::uint64_t seed);

}  // namespace goaec::harness
