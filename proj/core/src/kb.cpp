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

#include "goaec/kb.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <tuple>

#include "goaec/error.hpp"
#include "goaec/utf8.hpp"

namespace goaec::kb {

std::string_view to_string(VariantSource source) {
  switch (source) {
    case VariantSource::Mined:
      return "mined";
    case VariantSource::Manual:
      return "manual";
    case VariantSource::Runtime:
      return "runtime";
    case VariantSource::PhoneticGen:
      return "phonetic";
  }
  return "manual";
}

VariantSource variant_source_from_string(std::string_view name) {
  if (name == "mined") return VariantSource::Mined;
  if (name == "manual") return VariantSource::Manual;
  if (name == "runtime") return VariantSource::Runtime;
  if (name == "phonetic") return VariantSource::PhoneticGen;
  throw InvalidArgument("unknown variant source: " + std::string(name));
}

namespace {

void check_field(std::string_view value, const char* what) {
  if (value.empty()) throw InvalidArgument(std::string(what) + " is empty");
  if (value.find_first_of("|\r\n") != std::string_view::npos) {
    throw InvalidArgument(std::string(what) + " contains '|' or a line break");
  }
}

}  // namespace

std::uint64_t KnowledgeBase::add(std::string_view correct, std::string_view erroneous,
                                 VariantSource source, std::uint64_t count) {
  check_field(correct, "correct term");
  check_field(erroneous, "erroneous term");
  if (correct == erroneous) throw InvalidArgument("correct and erroneous terms are identical");
  if (count == 0) throw InvalidArgument("variant count must be positive");
  if (utf8::length(erroneous) > max_span_chars_ + utf8::length(correct)) {
    throw InvalidArgument("erroneous term \"" + std::string(erroneous) +
                          "\" is longer than the span bound allows");
  }

  auto [it, inserted] = entries_.try_emplace(std::string(correct));
  TermEntry& entry = it->second;
  if (inserted) entry.correct = std::string(correct);
  auto [vit, fresh] = entry.variants.try_emplace(std::string(erroneous));
  if (fresh) {
    vit->second = Variant{std::string(erroneous), source, count};
  } else {
    vit->second.count += count;
  }
  variant_index_[std::string(erroneous)].insert(std::string(correct));
  return ++revision_;
}

std::uint64_t KnowledgeBase::remove(std::string_view correct, std::string_view erroneous) {
  auto it = entries_.find(std::string(correct));
  if (it == entries_.end()) {
    throw NotFound("no term \"" + std::string(correct) + "\"");
  }
  auto vit = it->second.variants.find(std::string(erroneous));
  if (vit == it->second.variants.end()) {
    throw NotFound("term \"" + std::string(correct) + "\" has no variant \"" +
                   std::string(erroneous) + "\"");
  }
  it->second.variants.erase(vit);
  if (it->second.variants.empty()) entries_.erase(it);

  auto iit = variant_index_.find(std::string(erroneous));
  iit->second.erase(std::string(correct));
  if (iit->second.empty()) variant_index_.erase(iit);
  return ++revision_;
}

bool KnowledgeBase::contains(std::string_view correct, std::string_view erroneous) const {
  auto it = entries_.find(std::string(correct));
  return it != entries_.end() && it->second.variants.contains(std::string(erroneous));
}

std::vector<TermPair> KnowledgeBase::retrieve(std::span<const std::string> hypotheses) const {
  std::vector<TermPair> hits;
  for (const auto& [erroneous, terms] : variant_index_) {
    const bool found = std::any_of(hypotheses.begin(), hypotheses.end(), [&](const std::string& h) {
      return h.find(erroneous) != std::string::npos;
    });
    if (!found) continue;
    for (const auto& correct : terms) hits.push_back({correct, erroneous});
  }
  std::sort(hits.begin(), hits.end(), [](const TermPair& a, const TermPair& b) {
    const auto la = utf8::length(a.erroneous);
    const auto lb = utf8::length(b.erroneous);
    return std::tie(lb, a.erroneous, a.correct) < std::tie(la, b.erroneous, b.correct);
  });
  return hits;
}

std::vector<TermPair> KnowledgeBase::pairs() const {
  std::vector<TermPair> out;
  for (const auto& [correct, entry] : entries_) {
    for (const auto& [erroneous, v] : entry.variants) out.push_back({correct, erroneous});
  }
  return out;
}

std::size_t KnowledgeBase::pair_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, entry] : entries_) n += entry.variants.size();
  return n;
}

std::map<std::string, std::set<std::string>> KnowledgeBase::rebuild_index() const {
  std::map<std::string, std::set<std::string>> index;
  for (const auto& [correct, entry] : entries_) {
    for (const auto& [erroneous, v] : entry.variants) index[erroneous].insert(correct);
  }
  return index;
}

bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (auto ia = a.entries_.begin(), ib = b.entries_.begin(); ia != a.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    const auto& va = ia->second.variants;
    const auto& vb = ib->second.variants;
    if (va.size() != vb.size()) return false;
    for (auto x = va.begin(), y = vb.begin(); x != va.end(); ++x, ++y) {
      if (x->first != y->first || x->second.count != y->second.count) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

std::vector<MinedPair> mine_pairs(const metrics::NormalizedText& hyp,
                                  const metrics::NormalizedText& ref, std::size_t max_span_chars,
                                  std::string_view utterance_id) {
  if (max_span_chars == 0) throw InvalidArgument("max_span_chars must be at least 1");
  const metrics::EditScript script = metrics::align(hyp, ref);

  std::vector<MinedPair> out;
  std::size_t hyp_pos = 0;
  std::size_t ref_pos = 0;
  std::size_t k = 0;
  const auto& ops = script.ops;
  while (k < ops.size()) {
    if (ops[k].kind == metrics::OpKind::Match) {
      ++hyp_pos;
      ++ref_pos;
      ++k;
      continue;
    }
    const std::size_t hyp_start = hyp_pos;
    const std::size_t ref_start = ref_pos;
    std::size_t region_ops = 0;
    std::u32string error_span;
    std::u32string correct_span;
    for (; k < ops.size() && ops[k].kind != metrics::OpKind::Match; ++k, ++region_ops) {
      if (ops[k].hyp_char) {
        error_span.push_back(*ops[k].hyp_char);
        ++hyp_pos;
      }
      if (ops[k].ref_char) {
        correct_span.push_back(*ops[k].ref_char);
        ++ref_pos;
      }
    }
    if (region_ops > max_span_chars) continue;
    // Pure insertions or deletions have an empty side; an empty erroneous
    // string would match every hypothesis at retrieval time.
    std::string correct = utf8::encode(correct_span);
    std::string error = utf8::encode(error_span);
    if (utf8::trim(correct).empty() || utf8::trim(error).empty() || correct == error) continue;
    out.push_back(MinedPair{std::move(correct), std::move(error), std::string(utterance_id),
                            {ref_start, ref_pos}, {hyp_start, hyp_pos}});
  }
  return out;
}

std::vector<PairSupport> aggregate_mined(std::span<const MinedPair> mined) {
  std::map<TermPair, std::pair<std::set<std::string>, std::size_t>> acc;
  for (const MinedPair& m : mined) {
    auto& slot = acc[TermPair{m.correct_span, m.error_span}];
    slot.first.insert(m.utterance_id);
    ++slot.second;
  }
  std::vector<PairSupport> out;
  out.reserve(acc.size());
  for (auto& [pair, slot] : acc) out.push_back({pair, slot.first.size(), slot.second});
  return out;
}

KnowledgeBase build_from_mined(std::span<const PairSupport> support, std::size_t min_support,
                               std::size_t max_span_chars) {
  KnowledgeBase kb(max_span_chars);
  for (const PairSupport& s : support) {
    if (s.utterances < min_support) continue;
    if (utf8::length(s.pair.erroneous) > max_span_chars + utf8::length(s.pair.correct)) continue;
    kb.add(s.pair.correct, s.pair.erroneous, VariantSource::Mined, s.utterances);
  }
  return kb;
}

// ---------------------------------------------------------------------------

KnowledgeBase load_kb(std::istream& in, const std::string& source_name,
                      std::size_t max_span_chars) {
  KnowledgeBase kb(max_span_chars);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = utf8::trim(view);
    if (view.empty() || view.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto bar = view.find('|', start);
      fields.push_back(utf8::trim(view.substr(start, bar == std::string_view::npos ? bar : bar - start)));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(source_name, line_no, "expected 'correct | erroneous [| count]'");
    }
    std::uint64_t count = 1;
    if (fields.size() == 3) {
      const auto f = fields[2];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), count);
      if (ec != std::errc() || ptr != f.data() + f.size() || count == 0) {
        throw ParseError(source_name, line_no, "count must be a positive integer");
      }
    }
    try {
      kb.add(fields[0], fields[1], VariantSource::Manual, count);
    } catch (const InvalidArgument& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& path, std::size_t max_span_chars) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open knowledge base " + path.string());
  return load_kb(in, path.string(), max_span_chars);
}

void save_kb(const KnowledgeBase& kb, std::ostream& out) {
  out << "# correct word | erroneous word | count\n";
  for (const auto& [correct, entry] : kb.entries()) {
    for (const auto& [erroneous, v] : entry.variants) {
      out << correct << " | " << erroneous;
      if (v.count != 1) out << " | " << v.count;
      out << '\n';
    }
  }
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write knowledge base " + path.string());
  save_kb(kb, out);
  if (!out) throw DataError("failed writing knowledge base " + path.string());
}

}  // namespace goaec::kb
