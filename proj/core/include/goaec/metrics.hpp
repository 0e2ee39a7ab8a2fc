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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace goaec::metrics {

// Text prepared for character-level scoring: NFC-composed, whitespace
// removed, optionally with Unicode punctuation removed. `original` keeps the
// raw input for display.
struct NormalizedText {
  std::u32string chars;
  std::string original;

  std::size_t size() const noexcept { return chars.size(); }
  bool empty() const noexcept { return chars.empty(); }
  std::string utf8() const;

  friend bool operator==(const NormalizedText& a, const NormalizedText& b) {
    return a.chars == b.chars;
  }
};

NormalizedText normalize(std::string_view raw, bool strip_punctuation = true);

// Edit operations rewrite the hypothesis into the reference:
//   Delete removes a hypothesis character (hypothesis too long),
//   Insert adds a reference character (hypothesis too short).
enum class OpKind { Match, Substitute, Delete, Insert };

struct EditOp {
  OpKind kind;
  std::optional<std::size_t> hyp_index;
  std::optional<std::size_t> ref_index;
  std::optional<char32_t> hyp_char;
  std::optional<char32_t> ref_char;
};

struct EditScript {
  std::vector<EditOp> ops;
  std::size_t s_count = 0;
  std::size_t d_count = 0;
  std::size_t i_count = 0;

  std::size_t errors() const noexcept { return s_count + d_count + i_count; }
};

// Minimal unit-cost alignment. Ties are broken Match > Substitute > Delete >
// Insert while walking the hypothesis left to right, so scripts are stable.
EditScript align(std::u32string_view hyp, std::u32string_view ref);
inline EditScript align(const NormalizedText& hyp, const NormalizedText& ref) {
  return align(hyp.chars, ref.chars);
}

// Levenshtein distance only (two-row DP, no script).
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// Replays a script against the hypothesis; yields the reference when the
// script was produced for that pair.
std::u32string apply(const EditScript& script, std::u32string_view hyp);

// 100 * (S + D + I) / N. Not clamped. Throws InvalidArgument on empty ref.
double cer(const NormalizedText& hyp, const NormalizedText& ref);

struct CorpusScore {
  double cer = 0.0;
  double ser = 0.0;
  std::size_t total_ref_chars = 0;
  std::size_t total_s = 0;
  std::size_t total_d = 0;
  std::size_t total_i = 0;
  std::size_t sentence_errors = 0;
  std::size_t sentence_total = 0;
};

// Pooled CER (total edits over total reference characters) and SER.
// Throws InvalidArgument on an empty list or an empty reference.
CorpusScore score_corpus(std::span<const std::pair<NormalizedText, NormalizedText>> pairs);

// Convenience: normalizes raw (hyp, ref) strings first.
CorpusScore score_corpus(std::span<const std::pair<std::string, std::string>> pairs,
                         bool strip_punctuation = true);

}  // namespace goaec::metrics
