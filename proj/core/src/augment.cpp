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

#include "goaec/augment.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "goaec/hash.hpp"
#include "goaec/metrics.hpp"
#include "goaec/random.hpp"
#include "goaec/utf8.hpp"

namespace goaec::augment {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Text expansion

std::string expansion_prompt(const TextCorpus& seeds, std::size_t wanted) {
  std::string prompt =
      "You are helping build a speech dataset of in-game voice chat. Write " + std::to_string(wanted) +
      " new short phrases a player might say, in the same style as the examples: paraphrases of them "
      "or new tactical calls using the same game terms. Output one phrase per line, without numbering "
      "or commentary.\n\nExamples:\n";
  for (const auto& item : seeds.items) prompt += item.text + '\n';
  return prompt;
}

std::vector<std::string> split_phrases(std::string_view reply) {
  static const std::regex kBullet(R"(^\s*(?:[-*•]|\d+\s*[.)、:]|\(\d+\))\s*)");
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    std::string line(reply.substr(pos, nl - pos));
    pos = nl + 1;
    line = std::regex_replace(line, kBullet, "", std::regex_constants::format_first_only);
    const auto trimmed = utf8::trim(line);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

ExpansionResult expand_texts(const TextCorpus& seeds, llm::Backend& backend, std::size_t target_count,
                             const ExpandOptions& options) {
  seeds.validate();
  if (target_count < seeds.items.size()) {
    throw InvalidArgument("target_count " + std::to_string(target_count) + " is below the " +
                          std::to_string(seeds.items.size()) + " seed texts");
  }
  ExpansionResult result;
  result.corpus = seeds;

  std::set<std::u32string> seen;
  std::set<std::string> ids;
  for (const auto& item : seeds.items) {
    seen.insert(metrics::normalize(item.text).chars);
    ids.insert(item.id);
  }
  std::size_t next_id = 1;

  for (std::size_t round = 0; round < options.max_rounds && result.corpus.items.size() < target_count;
       ++round) {
    const std::size_t wanted = target_count - result.corpus.items.size();
    llm::BackendReply reply;
    try {
      reply = backend.complete({expansion_prompt(seeds, wanted), options.max_output_chars, options.timeout,
                                backend.id()});
    } catch (const std::exception& e) {
      reply = {llm::ReplyStatus::TransportError, {}, e.what()};
    }
    if (reply.status != llm::ReplyStatus::Ok) {
      result.backend_failed = true;
      result.warning = "text expansion stopped: backend '" + backend.id() + "' failed (" + reply.error + ")";
      spdlog::warn("{}", result.warning);
      break;
    }
    std::size_t accepted = 0;
    for (auto& phrase : split_phrases(reply.text)) {
      if (result.corpus.items.size() >= target_count) break;
      auto key = metrics::normalize(phrase).chars;
      if (key.empty() || !seen.insert(std::move(key)).second) continue;
      std::string id;
      do {
        char buf[32];
        std::snprintf(buf, sizeof buf, "ext-%06zu", next_id++);
        id = buf;
      } while (ids.count(id));
      ids.insert(id);
      result.corpus.items.push_back({id, std::move(phrase), {"expanded"}, {}, Provenance::LlmExpanded});
      ++accepted;
    }
    result.added += accepted;
    if (accepted == 0) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Voices and TTS

void VoiceProfile::validate() const {
  if (voice_id.empty()) throw InvalidArgument("voice profile with empty id");
  if (!(rate_factor >= 0.5 && rate_factor <= 2.0)) {
    throw InvalidArgument("voice \"" + voice_id + "\": rate_factor must be in [0.5, 2.0]");
  }
  if (!(volume_db >= -20.0 && volume_db <= 6.0)) {
    throw InvalidArgument("voice \"" + voice_id + "\": volume_db must be in [-20, 6]");
  }
}

MockTts::MockTts(MockTtsConfig config) : config_(config) {
  if (!audio::supported_sample_rate(config_.sample_rate)) {
    throw ConfigError("mock TTS: unsupported sample rate " + std::to_string(config_.sample_rate));
  }
  if (config_.char_duration_ms == 0) throw ConfigError("mock TTS: char_duration_ms must be positive");
  samples_per_char_ = static_cast<std::size_t>(config_.sample_rate) * config_.char_duration_ms / 1000;
}

audio::AudioClip MockTts::speak(std::string_view text, std::string_view voice_id) {
  const std::u32string chars = utf8::decode(text);
  audio::AudioClip clip;
  clip.sample_rate = config_.sample_rate;
  clip.samples.resize(chars.size() * samples_per_char_);
  const std::size_t fade = std::max<std::size_t>(1, samples_per_char_ / 24);
  for (std::size_t c = 0; c < chars.size(); ++c) {
    const std::string glyph = utf8::encode(chars[c]);
    const double freq = 180.0 + static_cast<double>(hash_fields(glyph, voice_id) % 520);
    for (std::size_t i = 0; i < samples_per_char_; ++i) {
      const std::size_t edge = std::min(i, samples_per_char_ - 1 - i);
      const double env = edge < fade ? static_cast<double>(edge) / fade : 1.0;
      const double phase = 2.0 * std::numbers::pi * freq * static_cast<double>(i) / config_.sample_rate;
      clip.samples[c * samples_per_char_ + i] = audio::saturate(config_.amplitude * env * std::sin(phase));
    }
  }
  return clip;
}

namespace {

class HttpTts final : public TtsBackend {
 public:
  explicit HttpTts(HttpTtsConfig config) : config_(std::move(config)) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.base_url, m, kUrl)) {
      throw ConfigError("invalid TTS URL \"" + config_.base_url + "\"");
    }
    host_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  audio::AudioClip speak(std::string_view text, std::string_view voice_id) override {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    const json body = {{"text", text}, {"voice_id", voice_id}};
    auto res = client.Post(path_, body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    if (!res) throw Error("TTS request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("TTS returned HTTP " + std::to_string(res->status));
    return audio::decode_wav(std::vector<std::uint8_t>(res->body.begin(), res->body.end()), "TTS response");
  }

 private:
  HttpTtsConfig config_;
  std::string host_;
  std::string path_;
};

}  // namespace

std::shared_ptr<TtsBackend> make_http_tts(const HttpTtsConfig& config) {
  return std::make_shared<HttpTts>(config);
}

std::shared_ptr<TtsBackend> make_tts(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    const std::string kind = j.value("kind", std::string("mock"));
    if (kind == "mock") {
      MockTtsConfig cfg;
      cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
      cfg.char_duration_ms = j.value("char_duration_ms", cfg.char_duration_ms);
      cfg.amplitude = j.value("amplitude", cfg.amplitude);
      return std::make_shared<MockTts>(cfg);
    }
    if (kind == "http") {
      HttpTtsConfig cfg;
      cfg.base_url = j.at("base_url").get<std::string>();
      cfg.timeout = llm::Millis(j.value("timeout_ms", static_cast<long long>(cfg.timeout.count())));
      return make_http_tts(cfg);
    }
    throw ConfigError("unknown TTS kind \"" + kind + "\"");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("TTS config: ") + e.what());
  }
}

audio::AudioClip synthesize(std::string_view text, const VoiceProfile& voice, TtsBackend& tts,
                            std::string_view text_id, std::size_t* clipped) {
  voice.validate();
  audio::AudioClip clip;
  try {
    clip = tts.speak(text, voice.voice_id);
    clip.validate();
  } catch (const std::exception& e) {
    throw SynthesisError(std::string(text_id), e.what());
  }

  const bool rate_identity = voice.rate_factor == 1.0;
  const bool gain_identity = voice.volume_db == 0.0;
  if (rate_identity && gain_identity) return clip;

  std::vector<double> shaped;
  if (rate_identity) {
    shaped.assign(clip.samples.begin(), clip.samples.end());
  } else {
    const auto out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(clip.samples.size()) / voice.rate_factor));
    shaped = audio::resample_linear(clip.samples, out_len);
  }
  const double gain = std::pow(10.0, voice.volume_db / 20.0);
  clip.samples.resize(shaped.size());
  for (std::size_t i = 0; i < shaped.size(); ++i) clip.samples[i] = audio::saturate(shaped[i] * gain, clipped);
  return clip;
}

// ---------------------------------------------------------------------------
// Noise

void NoiseSpec::validate() const {
  if (noise_id.empty()) throw InvalidArgument("noise spec with empty id");
  if (!(snr_db >= -5.0 && snr_db <= 30.0)) {
    throw InvalidArgument("noise \"" + noise_id + "\": snr_db must be in [-5, 30]");
  }
}

double MixResult::measured_snr_db() const {
  return 10.0 * std::log10(audio::mean_power(speech) / audio::mean_power(noise));
}

MixResult mix_noise(const audio::AudioClip& speech, const audio::AudioClip& noise, const NoiseSpec& spec,
                    std::uint64_t seed) {
  spec.validate();
  if (speech.samples.empty()) throw InvalidArgument("mix_noise: speech is empty");
  if (noise.samples.empty()) throw InvalidArgument("mix_noise: noise \"" + spec.noise_id + "\" is empty");

  std::vector<double> source;
  if (noise.sample_rate != speech.sample_rate) {
    const auto len = static_cast<std::size_t>(std::llround(static_cast<double>(noise.samples.size()) *
                                                           speech.sample_rate / noise.sample_rate));
    source = audio::resample_linear(noise.samples, std::max<std::size_t>(1, len));
  } else {
    source.assign(noise.samples.begin(), noise.samples.end());
  }

  const std::size_t n = speech.samples.size();
  const std::size_t offset =
      spec.offset_policy == OffsetPolicy::Start ? 0 : static_cast<std::size_t>(Rng(seed).below(source.size()));

  MixResult result;
  result.speech.assign(speech.samples.begin(), speech.samples.end());
  result.noise.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.noise[i] = source[(offset + i) % source.size()];

  const double ps = audio::mean_power(result.speech);
  const double pn = audio::mean_power(result.noise);
  if (pn <= 0.0) {
    throw InvalidArgument("mix_noise: noise \"" + spec.noise_id + "\" has zero power over the speech span");
  }
  result.noise_gain = std::sqrt(ps / (pn * std::pow(10.0, spec.snr_db / 10.0)));

  result.mixed.sample_rate = speech.sample_rate;
  result.mixed.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.noise[i] *= result.noise_gain;
    result.mixed.samples[i] = audio::saturate(result.speech[i] + result.noise[i], &result.clipped);
  }
  return result;
}

std::vector<NoiseSpec> parse_noise_catalog(std::string_view json_text, const std::filesystem::path& base_dir) {
  std::vector<NoiseSpec> out;
  try {
    const json j = json::parse(json_text);
    for (const json& e : j.at("noises")) {
      NoiseSpec spec;
      spec.noise_id = e.at("noise_id").get<std::string>();
      spec.noise_path = e.at("path").get<std::string>();
      if (spec.noise_path.is_relative()) spec.noise_path = base_dir / spec.noise_path;
      spec.snr_db = e.value("snr_db", spec.snr_db);
      const std::string policy = e.value("offset_policy", std::string("random"));
      if (policy == "random") {
        spec.offset_policy = OffsetPolicy::RandomSeeded;
      } else if (policy == "start") {
        spec.offset_policy = OffsetPolicy::Start;
      } else {
        throw ConfigError("noise \"" + spec.noise_id + "\": unknown offset_policy \"" + policy + "\"");
      }
      out.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("noise catalog: ") + e.what());
  }
  std::set<std::string_view> ids;
  for (const auto& spec : out) {
    try {
      spec.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (!ids.insert(spec.noise_id).second) throw ConfigError("duplicate noise id \"" + spec.noise_id + "\"");
  }
  return out;
}

std::vector<NoiseSpec> load_noise_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open noise catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_noise_catalog(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Dataset assembly

void SplitPolicy::validate() const {
  if (train < 0 || validation < 0 || test < 0 || std::abs(train + validation + test - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must be non-negative and sum to 1");
  }
}

namespace {

std::string file_stem_for(std::string_view id) {
  std::string out;
  for (unsigned char c : id) {
    const bool safe = std::isalnum(c) || c == '-' || c == '_' || c == '.';
    out += safe ? static_cast<char>(c) : '_';
  }
  if (out.empty() || out[0] == '.') out.insert(out.begin(), '_');
  return out;
}

std::string real_split(std::string_view id, std::uint64_t seed, const SplitPolicy& policy) {
  const double u = static_cast<double>(mix64(hash_fields(std::to_string(seed), "split", id)) >> 11) * 0x1.0p-53;
  if (u < policy.train) return "train";
  if (u < policy.train + policy.validation) return "validation";
  return "test";
}

struct Job {
  const TextItem* item;
  std::size_t sample;
  std::string id;
};

}  // namespace

DatasetManifest build_dataset(const TextCorpus& texts, std::span<const VoiceProfile> voices,
                              std::span<const NoiseSpec> noises,
                              std::span<const corpus::UtteranceRecord> real, std::uint64_t seed,
                              TtsBackend& tts, const BuildOptions& options) {
  texts.validate();
  options.split.validate();
  if (voices.empty()) throw InvalidArgument("build_dataset needs at least one voice");
  if (options.samples_per_text == 0) throw InvalidArgument("samples_per_text must be positive");
  for (const auto& v : voices) v.validate();
  for (const auto& n : noises) n.validate();

  std::vector<Job> jobs;
  std::set<std::string> ids;
  std::set<std::string> stems;
  for (const auto& item : texts.items) {
    for (std::size_t k = 0; k < options.samples_per_text; ++k) {
      std::string id = options.samples_per_text == 1 ? item.id : item.id + "-" + std::to_string(k + 1);
      if (!ids.insert(id).second) throw DataError("manifest id collision on \"" + id + "\"");
      if (!stems.insert(file_stem_for(id)).second) {
        throw DataError("manifest id \"" + id + "\" collides with another id's file name");
      }
      jobs.push_back({&item, k, std::move(id)});
    }
  }
  for (const auto& r : real) {
    if (!ids.insert(r.id).second) throw DataError("manifest id collision on \"" + r.id + "\"");
  }

  // Each noise file is read once.
  std::map<std::filesystem::path, audio::AudioClip> noise_audio;
  for (const auto& spec : noises) {
    if (!noise_audio.count(spec.noise_path)) noise_audio.emplace(spec.noise_path, audio::read_wav(spec.noise_path));
  }

  const auto audio_dir = options.out_dir / "audio";
  if (!jobs.empty()) std::filesystem::create_directories(audio_dir);

  DatasetManifest manifest;
  manifest.rows.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> clipped{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        const Job& job = jobs[i];
        Rng rng(hash_fields(std::to_string(seed), job.item->id, std::to_string(job.sample)));
        const VoiceProfile& voice = voices[rng.below(voices.size())];
        const NoiseSpec* noise = noises.empty() ? nullptr : &noises[rng.below(noises.size())];
        const std::uint64_t mix_seed = rng.next();

        std::size_t local_clipped = 0;
        audio::AudioClip clip = synthesize(job.item->text, voice, tts, job.id, &local_clipped);
        if (noise) {
          MixResult mixed = mix_noise(clip, noise_audio.at(noise->noise_path), *noise, mix_seed);
          local_clipped += mixed.clipped;
          clip = std::move(mixed.mixed);
        }
        const std::string rel = "audio/" + file_stem_for(job.id) + ".wav";
        audio::write_wav(clip, options.out_dir / rel);
        clipped += local_clipped;

        ManifestRow& row = manifest.rows[i];
        row.id = job.id;
        row.text = job.item->text;
        row.audio_path = rel;
        row.voice_id = voice.voice_id;
        if (noise) row.noise_id = noise->noise_id;
        row.split = "train";
        row.source = "tts";
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };

  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : real) {
    ManifestRow row;
    row.id = r.id;
    row.text = r.reference;
    row.audio_path = r.audio_path;
    row.split = real_split(r.id, seed, options.split);
    row.source = "player";
    manifest.rows.push_back(std::move(row));
  }
  manifest.clipped_samples = clipped;
  if (manifest.clipped_samples) {
    spdlog::info("augment: {} samples saturated to the 16-bit range", manifest.clipped_samples);
  }
  return manifest;
}

namespace {

ordered_json optional_json(const std::optional<std::string>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<std::string> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string to_json_line(const ManifestRow& row) {
  ordered_json j;
  j["id"] = row.id;
  j["text"] = row.text;
  j["audio_path"] = optional_json(row.audio_path);
  j["voice_id"] = optional_json(row.voice_id);
  j["noise_id"] = optional_json(row.noise_id);
  j["split"] = row.split;
  j["source"] = row.source;
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
  for (const auto& row : manifest.rows) out << to_json_line(row) << '\n';
}

std::vector<ManifestRow> read_manifest(std::istream& in, const std::string& source_name) {
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestRow row;
      row.id = j.at("id").get<std::string>();
      row.text = j.at("text").get<std::string>();
      row.audio_path = optional_field(j, "audio_path");
      row.voice_id = optional_field(j, "voice_id");
      row.noise_id = optional_field(j, "noise_id");
      row.split = j.at("split").get<std::string>();
      row.source = j.at("source").get<std::string>();
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return rows;
}

}  // namespace goaec::augment
