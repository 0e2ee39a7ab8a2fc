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

#include "goaec/metrics.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cstdint>

#include "goaec/error.hpp"
#include "goaec/utf8.hpp"

namespace goaec::metrics {

std::string NormalizedText::utf8() const { return utf8::encode(chars); }

NormalizedText normalize(std::string_view raw, bool strip_punctuation) {
  NormalizedText out;
  out.original = std::string(raw);
  if (raw.empty()) return out;

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  icu::UnicodeString composed;
  if (U_SUCCESS(status)) {
    composed = nfc->normalize(text, status);
  }
  if (U_FAILURE(status)) composed = text;

  out.chars.reserve(static_cast<std::size_t>(composed.length()));
  for (int32_t i = 0; i < composed.length(); i = composed.moveIndex32(i, 1)) {
    const UChar32 c = composed.char32At(i);
    if (u_isUWhiteSpace(c)) continue;
    if (strip_punctuation && u_ispunct(c)) continue;
    out.chars.push_back(static_cast<char32_t>(c));
  }
  return out;
}

EditScript align(std::u32string_view hyp, std::u32string_view ref) {
  const std::size_t m = hyp.size();
  const std::size_t n = ref.size();
  const std::size_t w = n + 1;

  // cost[i * w + j]: distance between hyp[i..] and ref[j..]. Working on
  // suffixes lets the script be read off front to back, so tie-breaks are
  // decided in hypothesis order.
  std::vector<std::uint32_t> cost((m + 1) * w);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return cost[i * w + j]; };
  for (std::size_t j = 0; j <= n; ++j) at(m, j) = static_cast<std::uint32_t>(n - j);
  for (std::size_t i = m; i-- > 0;) {
    at(i, n) = static_cast<std::uint32_t>(m - i);
    for (std::size_t j = n; j-- > 0;) {
      const std::uint32_t diag = at(i + 1, j + 1) + (hyp[i] == ref[j] ? 0u : 1u);
      const std::uint32_t del = at(i + 1, j) + 1;
      const std::uint32_t ins = at(i, j + 1) + 1;
      at(i, j) = std::min({diag, del, ins});
    }
  }

  EditScript script;
  script.ops.reserve(std::max(m, n));
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < m || j < n) {
    const std::uint32_t here = at(i, j);
    if (i < m && j < n && hyp[i] == ref[j] && here == at(i + 1, j + 1)) {
      script.ops.push_back({OpKind::Match, i, j, hyp[i], ref[j]});
      ++i;
      ++j;
    } else if (i < m && j < n && hyp[i] != ref[j] && here == at(i + 1, j + 1) + 1) {
      script.ops.push_back({OpKind::Substitute, i, j, hyp[i], ref[j]});
      ++script.s_count;
      ++i;
      ++j;
    } else if (i < m && here == at(i + 1, j) + 1) {
      script.ops.push_back({OpKind::Delete, i, std::nullopt, hyp[i], std::nullopt});
      ++script.d_count;
      ++i;
    } else {
      script.ops.push_back({OpKind::Insert, std::nullopt, j, std::nullopt, ref[j]});
      ++script.i_count;
      ++j;
    }
  }
  return script;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::u32string apply(const EditScript& script, std::u32string_view hyp) {
  std::u32string out;
  std::size_t pos = 0;
  for (const EditOp& op : script.ops) {
    switch (op.kind) {
      case OpKind::Match:
        out.push_back(hyp.at(pos++));
        break;
      case OpKind::Substitute:
        ++pos;
        out.push_back(*op.ref_char);
        break;
      case OpKind::Delete:
        ++pos;
        break;
      case OpKind::Insert:
        out.push_back(*op.ref_char);
        break;
    }
  }
  out.append(hyp.substr(std::min(pos, hyp.size())));
  return out;
}

double cer(const NormalizedText& hyp, const NormalizedText& ref) {
  if (ref.empty()) throw InvalidArgument("cer: reference is empty");
  const EditScript s = align(hyp, ref);
  return 100.0 * static_cast<double>(s.errors()) / static_cast<double>(ref.size());
}

CorpusScore score_corpus(std::span<const std::pair<NormalizedText, NormalizedText>> pairs) {
  if (pairs.empty()) throw InvalidArgument("score_corpus: no sentences");
  CorpusScore score;
  for (const auto& [hyp, ref] : pairs) {
    if (ref.empty()) throw InvalidArgument("score_corpus: empty reference for \"" + ref.original + "\"");
    const EditScript s = align(hyp, ref);
    score.total_ref_chars += ref.size();
    score.total_s += s.s_count;
    score.total_d += s.d_count;
    score.total_i += s.i_count;
    if (s.errors() > 0) ++score.sentence_errors;
    ++score.sentence_total;
  }
  const auto edits = score.total_s + score.total_d + score.total_i;
  score.cer = 100.0 * static_cast<double>(edits) / static_cast<double>(score.total_ref_chars);
  score.ser = 100.0 * static_cast<double>(score.sentence_errors) / static_cast<double>(score.sentence_total);
  return score;
}

CorpusScore score_corpus(std::span<const std::pair<std::string, std::string>> pairs,
                         bool strip_punctuation) {
  std::vector<std::pair<NormalizedText, NormalizedText>> normalized;
  normalized.reserve(pairs.size());
  for (const auto& [hyp, ref] : pairs) {
    normalized.emplace_back(normalize(hyp, strip_punctuation), normalize(ref, strip_punctuation));
  }
  return score_corpus(normalized);
}

}  // namespace goaec::metrics
