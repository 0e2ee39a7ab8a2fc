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

// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.
//
//   goaec_acceptance <scenario data dir> <golden dir> <goaec cli binary>

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "goaec/asr_sim.hpp"
#include "goaec/augment.hpp"
#include "goaec/error.hpp"
#include "goaec/kb.hpp"
#include "goaec/metrics.hpp"
#include "goaec/promptgen.hpp"
#include "goaec/random.hpp"
#include "goaec/service.hpp"
#include "goaec/utf8.hpp"
#include "oracle.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace goaec;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_scenario_dir;
fs::path g_golden_dir;
fs::path g_cli;
fs::path g_work;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

// ---------------------------------------------------------------------------

Outcome metrics_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  std::u32string alphabet;
  for (char32_t c = 0; c < 20; ++c) alphabet.push_back(U'一' + c * 7);
  auto random_text = [&] {
    std::u32string s(rng.below(13), U' ');
    for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
    return s;
  };
  std::size_t mismatched = 0;
  std::size_t bad_replay = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto hyp = random_text();
    const auto ref = random_text();
    const auto script = metrics::align(hyp, ref);
    if (script.errors() != oracle::levenshtein(hyp, ref)) ++mismatched;
    if (metrics::apply(script, hyp) != ref) ++bad_replay;
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && bad_replay == 0 && secs < 5.0,
          fmt("1000 pairs: %zu distance mismatches, %zu replay failures, %.3f s", mismatched, bad_replay, secs)};
}

Outcome spot_values() {
  const double cer = metrics::cer(metrics::normalize("哪里预习了"), metrics::normalize("哪里遇袭了"));
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"哪里预习了", "哪里遇袭了"}, {"敌人在哪儿", "敌人在哪儿"}, {"4号去救一下", "4号去救一下"}};
  const auto score = metrics::score_corpus(std::span<const std::pair<std::string, std::string>>(rows), true);
  return {cer == 40.0 && std::abs(score.ser - 100.0 / 3.0) <= 0.01,
          fmt("CER %.4f (want 40.0 exactly), SER %.4f (want 33.33 +/- 0.01)", cer, score.ser)};
}

Outcome mining_fixture() {
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"哪里预习了", "哪里遇袭了"}, {"DNA在哪", "敌人在哪儿"}, {"适合去救一下", "4号去救一下"}};
  std::set<kb::TermPair> pairs;
  bool empty_side = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& m : kb::mine_pairs(metrics::normalize(rows[i].first), metrics::normalize(rows[i].second), 3,
                                        "row" + std::to_string(i))) {
      empty_side |= m.correct_span.empty() || m.error_span.empty();
      pairs.insert({m.correct_span, m.error_span});
    }
  }
  const bool ok = pairs.count({"遇袭", "预习"}) && pairs.count({"敌人", "DNA"}) && !empty_side;
  std::string listing;
  for (const auto& p : pairs) listing += " (" + p.correct + "," + p.erroneous + ")";
  return {ok, fmt("%zu pairs:%s; empty side: %s", pairs.size(), listing.c_str(), empty_side ? "yes" : "no")};
}

Outcome retrieval_oracle() {
  Rng rng(777);
  const std::u32string alphabet = U"敌人遇袭预习点包带";
  auto random_text = [&](std::size_t lo, std::size_t hi) {
    std::u32string s(lo + rng.below(hi - lo + 1), U' ');
    for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
    return utf8::encode(s);
  };
  std::size_t checks = 0;
  std::size_t mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    kb::KnowledgeBase base;
    std::vector<std::pair<std::string, std::string>> flat;
    const std::size_t entries = 1 + rng.below(30);
    for (std::size_t e = 0; e < entries; ++e) {
      const std::string correct = random_text(1, 3);
      const std::string erroneous = random_text(1, 3);
      if (correct == erroneous) continue;
      base.add(correct, erroneous);
      flat.emplace_back(correct, erroneous);
    }
    std::sort(flat.begin(), flat.end());
    flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
    std::vector<std::string> hyps;
    for (int h = 0; h < 200; ++h) hyps.push_back(random_text(0, 10));
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      const std::vector<std::string> single = {hyps[h]};
      const std::vector<std::string> triple = {hyps[h], hyps[(h + 1) % hyps.size()], hyps[(h + 2) % hyps.size()]};
      for (const auto* set : {&single, &triple}) {
        std::set<std::pair<std::string, std::string>> got;
        for (const auto& p : base.retrieve(*set)) got.emplace(p.correct, p.erroneous);
        ++checks;
        if (got != oracle::retrieve(flat, *set)) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%zu retrievals over 200 KBs x 200 hypotheses, %zu mismatches", checks, mismatches)};
}

Outcome end_to_end() {
  const auto f = scenario::load(g_scenario_dir);
  const auto r = scenario::run(f, 1000, 500, 42);
  const double full = r.cer.at("pipeline");
  const double no_rag = r.cer.at("pipeline-no-rag");
  double best_vanilla = 1e9;
  bool nbest_ok = true;
  for (const auto& s : scenario::kSources) {
    best_vanilla = std::min(best_vanilla, r.cer.at("vanilla:" + s));
    nbest_ok &= full <= r.cer.at("pipeline-no-nbest:" + s);
  }
  const bool ok = full < no_rag && no_rag < best_vanilla && nbest_ok && full <= 0.5 * best_vanilla && r.seconds < 60.0;
  std::string detail = fmt("pipeline %.2f < no-rag %.2f < best vanilla %.2f; no-nbest", full, no_rag, best_vanilla);
  for (const auto& s : scenario::kSources) detail += fmt(" %s %.2f", s.c_str(), r.cer.at("pipeline-no-nbest:" + s));
  detail += fmt("; vanilla ASR-B %.2f; KB %zu pairs; %zu chars; %.2f s", r.cer.at("vanilla:ASR-B"), r.kb_pairs,
                r.eval_chars, r.seconds);
  return {ok, detail};
}

prompt::NBestSet golden_nbest() {
  return {{{"ASR-B", "DNA在哪"}, {"ASR-A", "滴哪在哪"}, {"ASR-T", "敌人在哪"}}, "四人小队，农场地图", "golden-1"};
}

Outcome prompt_golden() {
  const std::vector<kb::TermPair> kb_pairs = {{"敌人", "DNA"}};
  const auto spec = prompt::build_prompt(golden_nbest(), kb_pairs, 42);
  const fs::path golden = g_golden_dir / "prompt_seed42.txt";
  if (std::getenv("GOAEC_UPDATE_GOLDEN")) spit(golden, spec.rendered);
  const bool golden_ok = fs::exists(golden) && slurp(golden) == spec.rendered;

  std::map<std::vector<std::size_t>, std::size_t> counts;
  const std::size_t trials = 10000;
  for (std::size_t seed = 0; seed < trials; ++seed) {
    ++counts[prompt::build_prompt(golden_nbest(), kb_pairs, seed).permutation];
  }
  double worst = 0.0;
  double chi2 = 0.0;
  const double expected = trials / 6.0;
  for (const auto& [perm, n] : counts) {
    worst = std::max(worst, std::abs(static_cast<double>(n) / trials - 1.0 / 6.0));
    chi2 += (n - expected) * (n - expected) / expected;
  }
  const bool uniform = counts.size() == 6 && worst <= 0.02;
  return {golden_ok && uniform, fmt("golden bytes %s; %zu orderings, max deviation %.2f%%, chi-square %.2f (5 dof)",
                                    golden_ok ? "match" : "DIFFER", counts.size(), 100.0 * worst, chi2)};
}

Outcome service_contract() {
  service::ServiceConfig config;
  config.port = 0;
  kb::KnowledgeBase initial;
  initial.add("敌人", "DNA");
  service::CorrectionService svc(config, std::make_shared<llm::MockBackend>(llm::MockBehavior::KbReplace),
                                 std::move(initial));
  const int port = svc.start();
  httplib::Client client("127.0.0.1", port);

  std::vector<std::string> problems;
  const json req = {{"hypotheses", {"DNA在哪", "滴哪在哪", "敌人在哪"}}, {"utterance_id", "svc-enemy"}};
  auto res = client.Post("/v1/correct", req.dump(), "application/json");
  std::string first;
  if (!res || res->status != 200) {
    problems.push_back("correct request failed");
  } else {
    const json body = json::parse(res->body);
    first = body.at("corrected").get<std::string>();
    const json hits = body.at("kb_hits");
    if (first != "敌人在哪") problems.push_back("corrected " + first);
    if (hits.size() != 1 || hits[0].at("correct") != "敌人" || hits[0].at("erroneous") != "DNA") {
      problems.push_back("kb_hits " + hits.dump());
    }
  }

  const json add = {{"correct", "遇袭"}, {"erroneous", "预习"}};
  auto added = client.Post("/v1/kb/entries", add.dump(), "application/json");
  const json req2 = {{"hypotheses", {"哪里预习了", "哪里预习了", "哪里遇袭了"}}, {"utterance_id", "svc-ambush"}};
  auto res2 = client.Post("/v1/correct", req2.dump(), "application/json");
  bool visible = false;
  if (added && added->status == 200 && res2 && res2->status == 200) {
    const json body = json::parse(res2->body);
    for (const auto& h : body.at("kb_hits")) visible |= h.at("correct") == "遇袭" && h.at("erroneous") == "预习";
    visible &= body.at("revision").get<std::uint64_t>() == json::parse(added->body).at("revision").get<std::uint64_t>();
    visible &= body.at("corrected") == "哪里遇袭了";
  }
  if (!visible) problems.push_back("added pair not visible to the next request");
  svc.stop();

  service::CorrectionService failing(config, std::make_shared<llm::MockBackend>(llm::MockBehavior::FailAlways));
  const int port2 = failing.start();
  httplib::Client client2("127.0.0.1", port2);
  auto res3 = client2.Post("/v1/correct", req.dump(), "application/json");
  bool fallback = false;
  if (res3 && res3->status == 200) {
    const json body = json::parse(res3->body);
    fallback = body.at("origin") == "fallback" && body.at("corrected") == "DNA在哪";
  }
  if (!fallback) problems.push_back("FailAlways did not yield 200 + fallback");
  failing.stop();

  std::string detail = "corrected \"" + first + "\", kb_hits [(敌人,DNA)], add visible, fallback 200";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += p + "; ";
  }
  return {problems.empty(), detail};
}

Outcome audio_mixing() {
  augment::MockTts tts;
  Rng rng(31337);
  double worst = 0.0;
  double worst_output = 0.0;
  std::size_t clipped_total = 0;
  bool range_ok = true;
  for (int i = 0; i < 50; ++i) {
    std::u32string text(2 + rng.below(10), U'一');
    for (auto& c : text) c = U'一' + static_cast<char32_t>(rng.below(2000));
    const auto speech = tts.speak(utf8::encode(text), "v" + std::to_string(rng.below(6)));
    audio::AudioClip noise;
    noise.samples.resize(1000 + rng.below(40000));
    const double amp = 100.0 + rng.uniform() * 20000.0;
    for (auto& s : noise.samples) s = audio::saturate((rng.uniform() * 2.0 - 1.0) * amp);
    augment::NoiseSpec spec{"n" + std::to_string(i), {}, -5.0 + 35.0 * rng.uniform(),
                            i % 2 ? augment::OffsetPolicy::Start : augment::OffsetPolicy::RandomSeeded};
    const auto mixed = augment::mix_noise(speech, noise, spec, rng.next());
    worst = std::max(worst, std::abs(mixed.measured_snr_db() - spec.snr_db));
    std::vector<double> residual(speech.samples.size());
    for (std::size_t k = 0; k < residual.size(); ++k) residual[k] = mixed.mixed.samples[k] - speech.samples[k];
    const double output_snr = 10.0 * std::log10(audio::mean_power(speech.samples) / audio::mean_power(residual));
    worst_output = std::max(worst_output, std::abs(output_snr - spec.snr_db));
    clipped_total += mixed.clipped;
    for (std::size_t k = 0; k < mixed.mixed.samples.size(); ++k) {
      const double want = std::clamp(std::nearbyint(mixed.speech[k] + mixed.noise[k]), -32768.0, 32767.0);
      range_ok &= mixed.mixed.samples[k] == static_cast<std::int16_t>(want);
    }
    range_ok &= mixed.mixed.samples.size() == speech.samples.size();
  }

  sim::ChannelProfile zero{"zero", 0, 0, 0, nullptr, {{"遇袭", {"预习"}}}, U"", 5};
  bool zero_identity = true;
  for (const char* ref : {"哪里遇袭了", "DNA在哪", "4号去救一下", ""}) {
    zero_identity &= sim::corrupt(ref, zero, ref) == ref;
  }
  const augment::VoiceProfile unit{"unit", 1.0, 0.0};
  const auto direct = tts.speak("敌人在哪", "unit");
  const bool unit_gain = augment::synthesize("敌人在哪", unit, tts).samples == direct.samples;

  return {worst <= 0.5 && range_ok && zero_identity && unit_gain,
          fmt("50 mixes: max |SNR error| %.4f dB tracked, %.4f dB from output samples; %zu saturated samples, all in range: %s; zero-rate identity %s; "
              "unit gain identity %s",
              worst, worst_output, clipped_total, range_ok ? "yes" : "no", zero_identity ? "yes" : "no", unit_gain ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// Determinism sweep over the CLI.

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + g_cli.string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

// Relative path -> bytes for a file or every file under a directory.
std::map<std::string, std::string> snapshot(const fs::path& p) {
  std::map<std::string, std::string> out;
  if (fs::is_regular_file(p)) {
    out[p.filename().string()] = slurp(p);
  } else if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), p).string()] = slurp(e.path());
    }
  }
  return out;
}

void write_determinism_inputs(const fs::path& dir) {
  const auto f = scenario::load(g_scenario_dir);
  std::ostringstream texts;
  corpus::write_text_corpus(scenario::make_texts(f, "utt", 120, 5), texts);
  spit(dir / "texts.jsonl", texts.str());

  std::string profiles = scenario::profiles_json();
  for (const char* name : {"pinyin.tsv", "terms.tsv"}) {
    const std::string quoted = std::string("\"") + name + "\"";
    const std::string absolute = json((g_scenario_dir / name).string()).dump();
    for (auto pos = profiles.find(quoted); pos != std::string::npos; pos = profiles.find(quoted, pos + absolute.size())) {
      profiles.replace(pos, quoted.size(), absolute);
    }
  }
  spit(dir / "profiles.json", profiles);
  spit(dir / "eval.json", R"({"backend": {"kind": "mock", "behavior": "kb-replace"}, "kb": "kb.txt", "threads": 4})");

  std::ostringstream aug_texts;
  corpus::write_text_corpus(scenario::make_texts(f, "aug", 10, 6), aug_texts);
  spit(dir / "aug_texts.jsonl", aug_texts.str());
  std::vector<corpus::UtteranceRecord> real;
  for (int i = 0; i < 5; ++i) {
    real.push_back({"player-" + std::to_string(i), "敌人在哪", {{"ASR-A", "DNA在哪"}}, "", "rec/" + std::to_string(i) + ".wav"});
  }
  corpus::write_corpus(real, dir / "real.jsonl");
  audio::AudioClip noise;
  Rng rng(9);
  noise.samples.resize(16000);
  for (auto& s : noise.samples) s = audio::saturate((rng.uniform() * 2.0 - 1.0) * 3000.0);
  fs::create_directories(dir / "noise");
  audio::write_wav(noise, dir / "noise" / "gunfire.wav");
  spit(dir / "noises.json",
       R"({"noises": [{"noise_id": "gunfire", "path": "noise/gunfire.wav", "snr_db": 10, "offset_policy": "random"},
                      {"noise_id": "gunfire-loud", "path": "noise/gunfire.wav", "snr_db": 0, "offset_policy": "start"}]})");
  spit(dir / "augment.json", R"({
  "texts": "aug_texts.jsonl", "real": "real.jsonl", "noise_catalog": "noises.json",
  "voices": [{"voice_id": "calm", "rate_factor": 1.0, "volume_db": 0},
             {"voice_id": "fast", "rate_factor": 1.3, "volume_db": -3},
             {"voice_id": "shout", "rate_factor": 0.9, "volume_db": 6}],
  "tts": {"kind": "mock", "char_duration_ms": 100},
  "expand": {"backend": {"kind": "mock", "behavior": "fixed",
                         "response": "1. 快去撤离点\n2. 小心狙击手\n3. 快去撤离点"}, "target_count": 12},
  "threads": 4
})");
}

Outcome determinism_sweep() {
  const fs::path in = g_work / "inputs";
  write_determinism_inputs(in);
  const std::string seed = " --seed 1234";
  std::map<std::string, std::map<std::string, std::string>> runs[2];
  std::vector<std::string> failures;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = g_work / ("run" + std::to_string(run));
    fs::create_directories(out);
    auto step = [&](const std::string& name, const std::string& args, const fs::path& result) {
      const int rc = run_cli(args, out / (name + ".log"));
      if (rc != 0) failures.push_back(name + " exited " + std::to_string(rc) + ": " + slurp(out / (name + ".log")));
      runs[run][name] = snapshot(result);
      if (runs[run][name].empty()) failures.push_back(name + " produced no output");
    };
    const auto corpus = out / "corpus.jsonl";
    step("simulate",
         "simulate --texts \"" + (in / "texts.jsonl").string() + "\" --profiles \"" + (in / "profiles.json").string() +
             "\" --out \"" + corpus.string() + "\"" + seed,
         corpus);
    const int mine_rc = run_cli("mine --corpus \"" + corpus.string() + "\" --min-support 2 --out \"" +
                                    (in / "kb.txt").string() + "\"",
                                out / "mine.log");
    if (mine_rc != 0) failures.push_back("mine exited " + std::to_string(mine_rc));
    step("eval",
         "eval --corpus \"" + corpus.string() + "\" -m vanilla:ASR-A -m vanilla:ASR-B -m pipeline -m pipeline-no-rag " +
             "-m pipeline-no-nbest:ASR-T --config \"" + (in / "eval.json").string() + "\" --out \"" +
             (out / "eval").string() + "\"" + seed,
         out / "eval");
    step("export-sft",
         "export-sft --corpus \"" + corpus.string() + "\" --kb \"" + (in / "kb.txt").string() + "\" --out \"" +
             (out / "sft.jsonl").string() + "\"" + seed,
         out / "sft.jsonl");
    step("augment",
         "augment --config \"" + (in / "augment.json").string() + "\" --out \"" + (out / "augment").string() + "\"" +
             seed,
         out / "augment");
  }
  std::string detail;
  for (const char* name : {"simulate", "eval", "export-sft", "augment"}) {
    const bool same = runs[0][name] == runs[1][name];
    if (!same) failures.push_back(std::string(name) + " outputs differ");
    detail += fmt("%s %zu files %s; ", name, runs[0][name].size(), same ? "identical" : "DIFFER");
  }
  for (const auto& f : failures) detail += f + "; ";
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: %s <scenario dir> <golden dir> <goaec cli>\n", argv[0]);
    return 2;
  }
  g_scenario_dir = fs::absolute(argv[1]);
  g_golden_dir = fs::absolute(argv[2]);
  g_cli = fs::absolute(argv[3]);
  g_work = fs::temp_directory_path() / ("goaec-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 metrics oracle", metrics_oracle},
      {"2 CER/SER spot values", spot_values},
      {"3 KB mining fixture", mining_fixture},
      {"4 retrieval completeness", retrieval_oracle},
      {"5 simulated end-to-end orderings", end_to_end},
      {"6 prompt golden + permutation uniformity", prompt_golden},
      {"7 service contract", service_contract},
      {"8 audio mixing", audio_mixing},
      {"9 determinism sweep", determinism_sweep},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s [%s] %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(g_work);
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
