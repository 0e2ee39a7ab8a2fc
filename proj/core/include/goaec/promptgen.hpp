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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "goaec/kb.hpp"

namespace goaec::prompt {

inline constexpr std::size_t kDefaultMaxHypotheses = 8;
inline constexpr std::size_t kDefaultMaxKbLines = 20;

struct Hypothesis {
  std::string source_id;
  std::string text;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

// Hypotheses H from k ASR sources plus background context B.
struct NBestSet {
  std::vector<Hypothesis> hypotheses;
  std::string context;
  std::string utterance_id;

  std::vector<std::string> texts() const;
  const Hypothesis* find(std::string_view source_id) const;

  // Throws InvalidArgument unless 1 <= size <= max_hypotheses, source ids are
  // unique, and texts are non-empty.
  void validate(std::size_t max_hypotheses = kDefaultMaxHypotheses) const;
};

// A prompt template. Recognized placeholders are {context}, {kb},
// {asr_outputs} and the source-count words {count_title}, {count},
// {models}, {have}, {these}. Any other brace text is literal, so the
// template's own "{Corrected ASR Text}" notation survives rendering.
//
// A template without {asr_outputs} is fixed-arity: it must contain the slots
// [req1] .. [reqN] and accepts at most N hypotheses.
class PromptTemplate {
 public:
  PromptTemplate(std::string version, std::string body);

  const std::string& version() const noexcept { return version_; }
  const std::string& body() const noexcept { return body_; }

  // nullopt for variadic templates.
  std::optional<std::size_t> fixed_arity() const noexcept { return fixed_arity_; }

  // Number of ASR output slots produced for `sources` hypotheses.
  std::size_t slot_count(std::size_t sources) const;

 private:
  std::string version_;
  std::string body_;
  std::optional<std::size_t> fixed_arity_;
};

// The correction prompt generalized to N sources; bytes come from the
// versioned asset assets/correction_prompt_v1.txt.
const PromptTemplate& default_template();

struct PromptOptions {
  std::size_t max_kb_lines = kDefaultMaxKbLines;
  std::string empty_context = "(none)";
  std::string empty_kb = "(no entries)";
};

struct PromptSpec {
  std::string rendered;
  // permutation[i] is the original index of the hypothesis shown as ASR i+1.
  std::vector<std::size_t> permutation;
  std::vector<kb::TermPair> kb_lines;
  std::uint64_t seed = 0;
};

// Renders Format(H, B) with a seeded uniform shuffle of the hypotheses and
// the first max_kb_lines retrieved pairs. Identical inputs and seed give
// byte-identical output.
PromptSpec build_prompt(const NBestSet& nbest, std::span<const kb::TermPair> kb_pairs,
                        std::uint64_t seed, const PromptTemplate& tmpl = default_template(),
                        const PromptOptions& options = {});

// Seed used for an utterance when none is given explicitly.
std::uint64_t seed_for_utterance(std::string_view utterance_id);

struct SftRecord {
  NBestSet nbest;
  std::vector<kb::TermPair> kb_pairs;
  std::string reference;
};

// Writes one {"prompt", "target"} JSON object per line. The prompt seed is
// seed_for_utterance(utterance_id); the target is the reference verbatim.
// Throws InvalidArgument on duplicate utterance ids or empty references.
// Returns the number of lines written.
std::size_t export_sft(std::span<const SftRecord> records, std::ostream& out,
                       const PromptTemplate& tmpl = default_template(),
                       const PromptOptions& options = {});

}  // namespace goaec::prompt
