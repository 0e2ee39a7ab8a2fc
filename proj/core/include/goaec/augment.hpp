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
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "goaec/corpus.hpp"
#include "goaec/error.hpp"
#include "goaec/gateway.hpp"
#include "goaec/wav.hpp"

namespace goaec::augment {

using corpus::Provenance;
using corpus::TextCorpus;
using corpus::TextItem;

// ---------------------------------------------------------------------------
// Text expansion

struct ExpandOptions {
  std::size_t max_rounds = 3;
  llm::Millis timeout{30'000};
  std::size_t max_output_chars = 8192;
};

struct ExpansionResult {
  TextCorpus corpus;  // seeds first, in order, then accepted new texts
  std::size_t added = 0;
  bool backend_failed = false;
  std::string warning;
};

// Asks the backend for new phrases in the style of the seeds, one per line,
// until target_count items exist or max_rounds is spent. New texts equal to
// an existing one after normalization are dropped. Backend failure keeps
// what was gathered so far and sets a warning. Throws InvalidArgument when
// target_count is below the seed count.
ExpansionResult expand_texts(const TextCorpus& seeds, llm::Backend& backend, std::size_t target_count,
                             const ExpandOptions& options = {});

// The request sent for one expansion round.
std::string expansion_prompt(const TextCorpus& seeds, std::size_t wanted);

// Splits a model reply into candidate phrases, dropping list numbering and
// bullets.
std::vector<std::string> split_phrases(std::string_view reply);

// ---------------------------------------------------------------------------
// Voices and TTS

struct VoiceProfile {
  std::string voice_id;
  double rate_factor = 1.0;
  double volume_db = 0.0;

  // Throws InvalidArgument outside 0.5 <= rate <= 2.0, -20 <= dB <= 6.
  void validate() const;
};

class SynthesisError : public Error {
 public:
  SynthesisError(std::string text_id, const std::string& what)
      : Error("synthesis of \"" + text_id + "\" failed: " + what), text_id_(std::move(text_id)) {}
  const std::string& text_id() const noexcept { return text_id_; }

 private:
  std::string text_id_;
};

// Produces speech at normal rate and volume; synthesize() applies the
// profile's rate and gain. Must be callable from several threads.
class TtsBackend {
 public:
  virtual ~TtsBackend() = default;
  virtual audio::AudioClip speak(std::string_view text, std::string_view voice_id) = 0;
};

struct MockTtsConfig {
  std::uint32_t sample_rate = 16000;
  std::uint32_t char_duration_ms = 120;
  double amplitude = 8000.0;
};

// One tone per character, pitch derived from (character, voice). Duration is
// exactly chars * char_duration_ms.
class MockTts final : public TtsBackend {
 public:
  explicit MockTts(MockTtsConfig config = {});
  audio::AudioClip speak(std::string_view text, std::string_view voice_id) override;
  std::size_t samples_per_char() const noexcept { return samples_per_char_; }

 private:
  MockTtsConfig config_;
  std::size_t samples_per_char_;
};

// POSTs {"text", "voice_id"} and expects a WAV body.
struct HttpTtsConfig {
  std::string base_url;
  llm::Millis timeout{30'000};
};

std::shared_ptr<TtsBackend> make_http_tts(const HttpTtsConfig& config);

// Parses {"kind": "mock"|"http", ...}.
std::shared_ptr<TtsBackend> make_tts(std::string_view json_text);

// Speaks `text`, resamples by 1/rate_factor and applies volume_db as a linear
// gain with saturation. Rate 1.0 and 0 dB leave the backend samples as they
// are. Backend failures become SynthesisError carrying text_id.
audio::AudioClip synthesize(std::string_view text, const VoiceProfile& voice, TtsBackend& tts,
                            std::string_view text_id = {}, std::size_t* clipped = nullptr);

// ---------------------------------------------------------------------------
// Noise

enum class OffsetPolicy { RandomSeeded, Start };

struct NoiseSpec {
  std::string noise_id;
  std::filesystem::path noise_path;
  double snr_db = 10.0;
  OffsetPolicy offset_policy = OffsetPolicy::RandomSeeded;

  // Throws InvalidArgument outside -5 <= snr_db <= 30.
  void validate() const;
};

struct MixResult {
  audio::AudioClip mixed;
  // Pre-sum components, before rounding and saturation.
  std::vector<double> speech;
  std::vector<double> noise;
  double noise_gain = 0.0;
  std::size_t clipped = 0;

  double measured_snr_db() const;
};

// Loops or truncates `noise` to the speech length from an offset chosen per
// the spec's policy, scales it to the target SNR and adds it with hard
// saturation. Noise at another sample rate is resampled first. Throws
// InvalidArgument for empty speech, empty or zero-power noise.
MixResult mix_noise(const audio::AudioClip& speech, const audio::AudioClip& noise, const NoiseSpec& spec,
                    std::uint64_t seed);

// Catalog JSON: {"noises": [{"noise_id", "path", "snr_db", "offset_policy":
// "random"|"start"}]}; paths relative to the catalog's directory.
std::vector<NoiseSpec> parse_noise_catalog(std::string_view json_text, const std::filesystem::path& base_dir);
std::vector<NoiseSpec> load_noise_catalog(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset assembly

struct SplitPolicy {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;

  void validate() const;
};

struct ManifestRow {
  std::string id;
  std::string text;
  std::optional<std::string> audio_path;
  std::optional<std::string> voice_id;
  std::optional<std::string> noise_id;
  std::string split;
  std::string source;  // "tts" or "player"

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::size_t clipped_samples = 0;
};

struct BuildOptions {
  std::filesystem::path out_dir;  // audio goes to out_dir/audio
  std::size_t samples_per_text = 1;
  SplitPolicy split;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Synthesizes every text with a seeded (voice, noise) draw, writes the WAVs,
// and appends the real recordings. Synthetic rows are always "train"; real
// rows are split by a seeded hash of their id. Rows come out in input order
// whatever the thread count. Throws DataError on id collisions.
DatasetManifest build_dataset(const TextCorpus& texts, std::span<const VoiceProfile> voices,
                              std::span<const NoiseSpec> noises,
                              std::span<const corpus::UtteranceRecord> real, std::uint64_t seed,
                              TtsBackend& tts, const BuildOptions& options);

std::string to_json_line(const ManifestRow& row);
void write_manifest(const DatasetManifest& manifest, std::ostream& out);
std::vector<ManifestRow> read_manifest(std::istream& in, const std::string& source_name = "<stream>");

}  // namespace goaec::augment
