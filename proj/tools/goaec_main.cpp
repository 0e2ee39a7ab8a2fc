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

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "goaec/asr_sim.hpp"
#include "goaec/corpus.hpp"
#include "goaec/error.hpp"
#include "goaec/harness.hpp"
#include "goaec/kb.hpp"
#include "goaec/service.hpp"

namespace fs = std::filesystem;
using namespace goaec;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3 };

struct Globals {
  std::uint64_t seed = 0;
  fs::path config;
  fs::path out;
  bool verbose = false;
};

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw ConfigError(std::string(what) + " needs --out");
}

int cmd_eval(const Globals& g, const fs::path& corpus_path, const std::vector<std::string>& method_names,
             const fs::path& kb_override) {
  std::vector<std::string> parts;
  harness::EvalSetup setup;
  if (!g.config.empty()) {
    const std::string text = corpus::read_file(g.config);
    parts.push_back(text);
    setup = harness::parse_eval_config(text, g.config.parent_path(), &parts);
  } else {
    setup.pipeline.backend = std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace);
  }
  if (!kb_override.empty()) {
    const std::string bytes = corpus::read_file(kb_override);
    parts.push_back(bytes);
    std::istringstream in(bytes);
    setup.pipeline.kb = kb::load_kb(in, kb_override.string());
  }
  setup.seed = g.seed;

  std::vector<harness::MethodSpec> methods;
  for (const auto& m : method_names) {
    methods.push_back(harness::MethodSpec::parse(m));
    parts.push_back(m);
  }
  parts.push_back(std::to_string(g.seed));

  const std::string corpus_bytes = corpus::read_file(corpus_path);
  std::istringstream corpus_in(corpus_bytes);
  const auto records = corpus::read_corpus(corpus_in, corpus_path.string());

  std::vector<harness::MethodResult> details;
  const auto report = harness::evaluate(records, methods, setup, harness::corpus_id_for(corpus_path, corpus_bytes),
                                        harness::config_fingerprint(parts), &details);
  if (!g.out.empty()) harness::write_eval_outputs(report, details, records, g.out);
  std::cout << report.table();
  return kOk;
}

int cmd_mine(const Globals& g, const fs::path& corpus_path, const fs::path& feedback_path,
             const harness::MineOptions& options) {
  require_out(g, "mine");
  if (corpus_path.empty() == feedback_path.empty()) throw ConfigError("mine needs exactly one of --corpus, --feedback");
  std::vector<corpus::UtteranceRecord> records;
  if (!corpus_path.empty()) {
    records = corpus::read_corpus(corpus_path);
  } else {
    std::ifstream in(feedback_path, std::ios::binary);
    if (!in) throw DataError("cannot open feedback log " + feedback_path.string());
    records = service::read_feedback_log(in, feedback_path.string());
  }
  const auto summary = harness::mine_corpus(records, options);
  kb::save_kb(summary.kb, g.out);
  std::cout << "utterances " << records.size() << ", mined " << summary.mined << ", distinct "
            << summary.candidates << ", ambiguous " << summary.ambiguous << ", kept " << summary.kept << " (min support " << options.min_support
            << ")\n";
  return kOk;
}

int cmd_simulate(const Globals& g, const fs::path& texts_path, const fs::path& profiles_path) {
  require_out(g, "simulate");
  const auto texts = corpus::read_text_corpus(texts_path);
  const auto profiles = sim::load_profiles(profiles_path, g.seed);
  const auto summary = harness::simulate_corpus(texts, profiles);
  corpus::write_corpus(summary.records, g.out);
  std::cout << "utterances " << summary.records.size() << "\n";
  for (const auto& [source, score] : summary.per_source) {
    std::printf("%s: CER %.2f SER %.2f\n", source.c_str(), score.cer, score.ser);
  }
  return kOk;
}

int cmd_augment(const Globals& g) {
  if (g.config.empty()) throw ConfigError("augment needs --config");
  require_out(g, "augment");
  const auto summary = harness::run_augment(g.config, g.out, g.seed);
  if (!summary.warning.empty()) std::cerr << "warning: " << summary.warning << "\n";
  std::cout << "texts " << summary.texts << " (expanded " << summary.expanded << "), manifest rows "
            << summary.rows << ", clipped samples " << summary.clipped_samples << "\n";
  return kOk;
}

int cmd_export_sft(const Globals& g, const fs::path& corpus_path, const fs::path& kb_path, bool no_kb,
                   std::size_t max_kb_lines) {
  const auto records = corpus::read_corpus(corpus_path);
  kb::KnowledgeBase base;
  if (!kb_path.empty()) base = kb::load_kb(kb_path);
  harness::SftOptions options;
  options.include_kb = !no_kb;
  options.prompt.max_kb_lines = max_kb_lines;
  std::ostringstream out;
  const std::size_t lines = harness::export_sft_corpus(records, base, out, options);
  if (g.out.empty()) {
    std::cout << out.str();
  } else {
    corpus::write_file_atomic(g.out, out.str());
    std::cout << "wrote " << lines << " records\n";
  }
  return kOk;
}

service::CorrectionService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Globals& g, int port_override) {
  if (g.config.empty()) throw ConfigError("serve needs --config");
  auto config = service::load_service_config(g.config);
  if (port_override >= 0) config.port = port_override;
  auto svc = service::make_service(config);
  g_service = svc.get();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  svc->run();
  g_service = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goaec: multi-source ASR error correction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--config", g.config, "Config file");
  app.add_option("--out", g.out, "Output path");
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

  auto* eval = app.add_subcommand("eval", "Score correction methods on a corpus");
  fs::path eval_corpus;
  fs::path eval_kb;
  std::vector<std::string> methods;
  eval->add_option("--corpus", eval_corpus, "Corpus (JSONL)")->required();
  eval->add_option("-m,--method", methods,
                   "vanilla:<source>, pipeline[:<name>], pipeline-no-rag, pipeline-no-nbest:<source>")
      ->required();
  eval->add_option("--kb", eval_kb, "KB file for the default pipeline");

  auto* mine = app.add_subcommand("mine", "Mine a terminology KB from a corpus or feedback log");
  fs::path mine_corpus;
  fs::path mine_feedback;
  harness::MineOptions mine_options;
  mine->add_option("--corpus", mine_corpus, "Corpus (JSONL)");
  mine->add_option("--feedback", mine_feedback, "Service feedback log (JSONL)");
  mine->add_option("-n,--max-span", mine_options.max_span, "Max edit ops per mined region");
  mine->add_option("--min-support", mine_options.min_support, "Minimum distinct utterances per pair");
  bool keep_ambiguous = false;
  mine->add_flag("--keep-ambiguous", keep_ambiguous, "Keep pairs whose erroneous span occurs in a reference");

  auto* simulate = app.add_subcommand("simulate", "Corrupt texts through simulated ASR channels");
  fs::path sim_texts;
  fs::path sim_profiles;
  simulate->add_option("--texts", sim_texts, "Text corpus (JSONL)")->required();
  simulate->add_option("--profiles", sim_profiles, "Channel profiles (JSON)")->required();

  auto* aug = app.add_subcommand("augment", "Build a synthetic speech dataset");

  auto* sft = app.add_subcommand("export-sft", "Export prompt/target pairs for fine-tuning");
  fs::path sft_corpus;
  fs::path sft_kb;
  bool sft_no_kb = false;
  std::size_t sft_kb_lines = prompt::kDefaultMaxKbLines;
  sft->add_option("--corpus", sft_corpus, "Corpus (JSONL)")->required();
  sft->add_option("--kb", sft_kb, "KB file");
  sft->add_flag("--no-kb", sft_no_kb, "Leave the terminology section empty");
  sft->add_option("--max-kb-lines", sft_kb_lines, "KB lines per prompt");

  auto* serve = app.add_subcommand("serve", "Run the correction service");
  int serve_port = -1;
  serve->add_option("--port", serve_port, "Override the configured port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  auto logger = spdlog::stderr_color_mt("goaec");
  spdlog::set_default_logger(logger);
  spdlog::set_level(g.verbose || serve->parsed() ? spdlog::level::info : spdlog::level::err);

  try {
    if (eval->parsed()) return cmd_eval(g, eval_corpus, methods, eval_kb);
    mine_options.drop_ambiguous = !keep_ambiguous;
    if (mine->parsed()) return cmd_mine(g, mine_corpus, mine_feedback, mine_options);
    if (simulate->parsed()) return cmd_simulate(g, sim_texts, sim_profiles);
    if (aug->parsed()) return cmd_augment(g);
    if (sft->parsed()) return cmd_export_sft(g, sft_corpus, sft_kb, sft_no_kb, sft_kb_lines);
    if (serve->parsed()) return cmd_serve(g, serve_port);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kDataError;
  } catch (const NotFound& e) {
    std::cerr << "not found: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kDataError;
  }
  return kConfigError;
}
