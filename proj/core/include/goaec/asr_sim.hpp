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
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "goaec/kb.hpp"
#include "goaec/promptgen.hpp"

namespace goaec::sim {

using TermConfusions = std::map<std::string, std::vector<std::string>>;

// One simulated ASR service. Rates are per reference character.
struct ChannelProfile {
  std::string source_id;
  double sub_rate = 0.0;
  double del_rate = 0.0;
  double ins_rate = 0.0;
  std::shared_ptr<const kb::PhoneticLexicon> lexicon;
  // Whole-term misrecognitions, applied with probability sub_rate.
  TermConfusions term_confusions;
  // Substitution fallback pool when no homophone exists; defaults to the
  // lexicon's characters.
  std::u32string char_pool;
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless rates are in [0, 1] and sum to at most 1.
  void validate() const;
};

struct CorruptOptions {
  bool force_term_hit = false;
};

struct TermHit {
  std::string term;
  std::string rendering;
  std::size_t ref_offset = 0;  // in characters
};

// What the channel did, for calibration checks.
struct CorruptTrace {
  std::string text;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;   // reference characters dropped
  std::size_t insertions = 0;  // spurious characters added
  std::size_t ref_chars = 0;   // characters exposed to char-level noise
  std::optional<TermHit> term_hit;
};

// Corrupts `ref` with randomness seeded by (profile.seed, utterance_id): at
// most one whole-term confusion first, then per-character substitute /
// delete / insert-after / keep draws outside the confused term. A non-empty
// reference never yields an empty hypothesis.
CorruptTrace corrupt_traced(std::string_view ref, const ChannelProfile& profile,
                            std::string_view utterance_id, const CorruptOptions& options = {});

inline std::string corrupt(std::string_view ref, const ChannelProfile& profile,
                           std::string_view utterance_id, const CorruptOptions& options = {}) {
  return corrupt_traced(ref, profile, utterance_id, options).text;
}

// One hypothesis per profile. Throws InvalidArgument on an empty profile list
// or duplicate source ids.
prompt::NBestSet simulate_nbest(std::string_view ref, std::span<const ChannelProfile> profiles,
                                std::string_view context, std::string_view utterance_id);

// "term<TAB>rendering[<TAB>rendering...]" lines; '#' comments allowed.
TermConfusions parse_term_confusions(std::istream& in, const std::string& source_name = "<stream>");
TermConfusions load_term_confusions(const std::filesystem::path& path);

// Profile config (JSON):
//   {"profiles": [{"source_id": "ASR-B", "sub_rate": 0.1, "del_rate": 0.02,
//                  "ins_rate": 0.02, "seed": 7, "lexicon": "pinyin.tsv",
//                  "term_confusions": "terms.tsv", "char_pool": "..."}]}
// Relative paths resolve against the config file's directory. A non-zero
// run_seed is mixed into every profile seed.
std::vector<ChannelProfile> parse_profiles(std::string_view json_text,
                                           const std::filesystem::path& base_dir,
                                           std::uint64_t run_seed = 0);
std::vector<ChannelProfile> load_profiles(const std::filesystem::path& path, std::uint64_t run_seed = 0);

}  // namespace goaec::sim
