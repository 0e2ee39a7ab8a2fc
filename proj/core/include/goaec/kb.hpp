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
#include <mutex>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "goaec/metrics.hpp"

namespace goaec::kb {

// One "correct word | erroneous word" line.
struct TermPair {
  std::string correct;
  std::string erroneous;

  friend auto operator<=>(const TermPair&, const TermPair&) = default;
};

enum class VariantSource { Mined, Manual, Runtime, PhoneticGen };

std::string_view to_string(VariantSource source);
VariantSource variant_source_from_string(std::string_view name);

struct Variant {
  std::string erroneous;
  VariantSource source = VariantSource::Manual;
  std::uint64_t count = 1;
};

struct TermEntry {
  std::string correct;
  std::map<std::string, Variant> variants;  // keyed by erroneous string
};

// The terminology store. Plain value type; see KbStore for the concurrent
// snapshot-publishing wrapper.
//
// Invariants:
//  - variant_index() is exactly the inverse of the entries' variant sets;
//  - revision() strictly increases on every successful mutation;
//  - a variant never equals its term and is at most
//    max_span_chars + length(correct) characters long.
class KnowledgeBase {
 public:
  static constexpr std::size_t kDefaultMaxSpanChars = 3;

  explicit KnowledgeBase(std::size_t max_span_chars = kDefaultMaxSpanChars)
      : max_span_chars_(max_span_chars) {}

  // Adds a variant or bumps its count by `count`. Returns the new revision.
  // Throws InvalidArgument for empty strings, correct == erroneous, strings
  // containing '|' or line breaks, or a variant past the length bound.
  std::uint64_t add(std::string_view correct, std::string_view erroneous,
                    VariantSource source = VariantSource::Manual, std::uint64_t count = 1);

  // Removes one variant (and the entry once it has none). Throws NotFound.
  std::uint64_t remove(std::string_view correct, std::string_view erroneous);

  bool contains(std::string_view correct, std::string_view erroneous) const;

  // Every pair whose erroneous string occurs as a substring of any
  // hypothesis, deduplicated, longest erroneous string first (in characters),
  // then by erroneous and correct bytes.
  std::vector<TermPair> retrieve(std::span<const std::string> hypotheses) const;

  // All pairs in (correct, erroneous) order.
  std::vector<TermPair> pairs() const;

  const std::map<std::string, TermEntry>& entries() const noexcept { return entries_; }
  const std::map<std::string, std::set<std::string>>& variant_index() const noexcept {
    return variant_index_;
  }
  std::uint64_t revision() const noexcept { return revision_; }
  std::size_t max_span_chars() const noexcept { return max_span_chars_; }
  std::size_t pair_count() const noexcept;
  bool empty() const noexcept { return entries_.empty(); }

  // Recomputes the inverse index from entries; used to check consistency.
  std::map<std::string, std::set<std::string>> rebuild_index() const;

  // Content equality: same terms, variants and counts. Revision, sources and
  // limits are not compared.
  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b);

 private:
  friend class KbStore;

  std::size_t max_span_chars_;
  std::map<std::string, TermEntry> entries_;
  std::map<std::string, std::set<std::string>> variant_index_;
  std::uint64_t revision_ = 0;
};

// ---------------------------------------------------------------------------
// Mining

struct MinedPair {
  std::string correct_span;
  std::string error_span;
  std::string utterance_id;
  std::pair<std::size_t, std::size_t> ref_range;  // [start, end) in chars
  std::pair<std::size_t, std::size_t> hyp_range;
};

// Groups maximal runs of non-Match ops into difference regions and keeps the
// regions with at most max_span_chars edit ops and non-empty spans on both
// sides. Throws InvalidArgument when max_span_chars is 0.
std::vector<MinedPair> mine_pairs(const metrics::NormalizedText& hyp,
                                  const metrics::NormalizedText& ref, std::size_t max_span_chars,
                                  std::string_view utterance_id = {});

// Support of one (correct, error) pair across a corpus.
struct PairSupport {
  TermPair pair;
  std::size_t utterances = 0;   // distinct utterances showing the pair
  std::size_t occurrences = 0;  // every hypothesis occurrence
};

// Aggregates mined pairs by (correct, error). Support counts distinct
// utterance ids, so agreeing ASR sources on one utterance count once.
std::vector<PairSupport> aggregate_mined(std::span<const MinedPair> mined);

// Builds a KB from the pairs whose support reaches min_support. Count of each
// variant is its utterance support; source is Mined.
KnowledgeBase build_from_mined(std::span<const PairSupport> support, std::size_t min_support,
                               std::size_t max_span_chars = KnowledgeBase::kDefaultMaxSpanChars);

// ---------------------------------------------------------------------------
// File format: UTF-8, one "correct | erroneous [| count]" per line; lines
// starting with '#' and blank lines are ignored; duplicates merge counts.

KnowledgeBase load_kb(std::istream& in, const std::string& source_name = "<stream>",
                      std::size_t max_span_chars = KnowledgeBase::kDefaultMaxSpanChars);
KnowledgeBase load_kb(const std::filesystem::path& path,
                      std::size_t max_span_chars = KnowledgeBase::kDefaultMaxSpanChars);
void save_kb(const KnowledgeBase& kb, std::ostream& out);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Phonetic lexicon: character -> tone-stripped syllable keys.

class PhoneticLexicon {
 public:
  PhoneticLexicon() = default;

  // Adds a reading. Trailing tone digits are stripped and ASCII is lowercased.
  void add(char32_t c, std::string_view syllable);

  // Parses "char<TAB>syllable" lines; '#' comments allowed.
  static PhoneticLexicon parse(std::istream& in, const std::string& source_name = "<stream>");
  static PhoneticLexicon load(const std::filesystem::path& path);

  const std::vector<std::string>* keys(char32_t c) const;
  bool homophones(char32_t a, char32_t b) const;

  // Characters reading `key`, ascending code point.
  const std::vector<char32_t>& chars_for(const std::string& key) const;

  // Every covered character, ascending code point.
  const std::vector<char32_t>& characters() const noexcept { return characters_; }
  bool empty() const noexcept { return readings_.empty(); }

 private:
  std::map<char32_t, std::vector<std::string>> readings_;
  std::map<std::string, std::vector<char32_t>> by_key_;
  std::vector<char32_t> characters_;
};

std::string strip_tone(std::string_view syllable);

// Single-character homophone swaps of `term` drawn from `pool`, in term
// position order then pool code point order. Excludes the term itself.
std::vector<std::string> gen_phonetic_variants(std::string_view term, const PhoneticLexicon& lexicon,
                                               std::u32string_view pool);

// ---------------------------------------------------------------------------
// Concurrent store: many readers take immutable snapshots; writers are
// serialized and publish a new snapshot atomically.

class KbStore {
 public:
  explicit KbStore(KnowledgeBase initial = KnowledgeBase());

  std::shared_ptr<const KnowledgeBase> snapshot() const;

  std::uint64_t add(std::string_view correct, std::string_view erroneous,
                    VariantSource source = VariantSource::Manual, std::uint64_t count = 1);
  std::uint64_t remove(std::string_view correct, std::string_view erroneous);
  // Replaces the whole KB; revision continues past the current one.
  std::uint64_t replace(KnowledgeBase kb);

 private:
  template <typename Fn>
  std::uint64_t mutate(Fn&& fn);

  mutable std::mutex publish_mu_;
  std::mutex writer_mu_;
  std::shared_ptr<const KnowledgeBase> current_;
};

}  // namespace goaec::kb
