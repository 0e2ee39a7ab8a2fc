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

#include "goaec/promptgen.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "goaec/error.hpp"
#include "goaec/hash.hpp"
#include "goaec/random.hpp"
#include "goaec/utf8.hpp"

namespace goaec::prompt {

namespace detail {
extern const std::string_view kCorrectionPromptV1;
}  // namespace detail

std::vector<std::string> NBestSet::texts() const {
  std::vector<std::string> out;
  out.reserve(hypotheses.size());
  for (const auto& h : hypotheses) out.push_back(h.text);
  return out;
}

const Hypothesis* NBestSet::find(std::string_view source_id) const {
  for (const auto& h : hypotheses) {
    if (h.source_id == source_id) return &h;
  }
  return nullptr;
}

void NBestSet::validate(std::size_t max_hypotheses) const {
  if (hypotheses.empty()) throw InvalidArgument("n-best set is empty");
  if (hypotheses.size() > max_hypotheses) {
    throw InvalidArgument("n-best set has " + std::to_string(hypotheses.size()) +
                          " hypotheses; at most " + std::to_string(max_hypotheses) + " allowed");
  }
  std::set<std::string_view> seen;
  for (const auto& h : hypotheses) {
    if (!seen.insert(h.source_id).second) {
      throw InvalidArgument("duplicate source id \"" + h.source_id + "\"");
    }
    if (h.text.empty()) throw InvalidArgument("empty hypothesis from \"" + h.source_id + "\"");
  }
}

namespace {

std::string slot_marker(std::size_t i) { return "[req" + std::to_string(i) + "]"; }

std::string count_word(std::size_t n) {
  static constexpr const char* kWords[] = {"zero", "one", "two",   "three",  "four",   "five", "six",
                                           "seven", "eight", "nine", "ten", "eleven", "twelve"};
  if (n < std::size(kWords)) return kWords[n];
  return std::to_string(n);
}

std::string title_case(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string version, std::string body)
    : version_(std::move(version)), body_(std::move(body)) {
  if (body_.find("{asr_outputs}") != std::string::npos) return;
  std::size_t n = 0;
  while (body_.find(slot_marker(n + 1)) != std::string::npos) ++n;
  if (n == 0) {
    throw InvalidArgument("template \"" + version_ + "\" has neither {asr_outputs} nor [req1] slots");
  }
  fixed_arity_ = n;
}

std::size_t PromptTemplate::slot_count(std::size_t sources) const {
  if (!fixed_arity_) return sources;
  if (sources > *fixed_arity_) {
    throw InvalidArgument("template \"" + version_ + "\" has " + std::to_string(*fixed_arity_) +
                          " ASR slots but " + std::to_string(sources) + " hypotheses were given");
  }
  return *fixed_arity_;
}

const PromptTemplate& default_template() {
  static const PromptTemplate tmpl("correction_prompt_v1", std::string(detail::kCorrectionPromptV1));
  return tmpl;
}

std::uint64_t seed_for_utterance(std::string_view utterance_id) { return fnv1a64(utterance_id); }

PromptSpec build_prompt(const NBestSet& nbest, std::span<const kb::TermPair> kb_pairs,
                        std::uint64_t seed, const PromptTemplate& tmpl,
                        const PromptOptions& options) {
  nbest.validate(std::numeric_limits<std::size_t>::max());
  const std::size_t k = nbest.hypotheses.size();
  const std::size_t slots = tmpl.slot_count(k);

  PromptSpec spec;
  spec.seed = seed;
  spec.permutation.resize(k);
  std::iota(spec.permutation.begin(), spec.permutation.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(spec.permutation));

  const std::size_t kb_count = std::min(kb_pairs.size(), options.max_kb_lines);
  spec.kb_lines.assign(kb_pairs.begin(), kb_pairs.begin() + static_cast<std::ptrdiff_t>(kb_count));

  auto shown = [&](std::size_t slot) -> const std::string& {
    static const std::string kEmpty = "(none)";
    return slot < k ? nbest.hypotheses[spec.permutation[slot]].text : kEmpty;
  };

  std::string kb_section;
  for (const auto& pair : spec.kb_lines) {
    if (!kb_section.empty()) kb_section += '\n';
    kb_section += pair.correct + " | " + pair.erroneous;
  }
  if (kb_section.empty()) kb_section = options.empty_kb;

  std::string outputs;
  for (std::size_t i = 0; i < slots; ++i) {
    if (i) outputs += '\n';
    outputs += "ASR " + std::to_string(i + 1) + " Output: " + shown(i);
  }

  const bool plural = slots != 1;
  const std::string context =
      utf8::trim(nbest.context).empty() ? options.empty_context : nbest.context;

  const std::string& body = tmpl.body();
  std::string& out = spec.rendered;
  out.reserve(body.size() + outputs.size() + kb_section.size() + context.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    const char c = body[pos];
    if (c == '{') {
      const auto close = body.find('}', pos);
      if (close != std::string::npos) {
        const std::string_view name(body.data() + pos + 1, close - pos - 1);
        const std::string* value = nullptr;
        std::string scratch;
        if (name == "context") {
          value = &context;
        } else if (name == "kb") {
          value = &kb_section;
        } else if (name == "asr_outputs") {
          value = &outputs;
        } else if (name == "count_title") {
          scratch = title_case(count_word(slots));
        } else if (name == "count") {
          scratch = count_word(slots);
        } else if (name == "models") {
          scratch = plural ? "models" : "model";
        } else if (name == "have") {
          scratch = plural ? "have" : "has";
        } else if (name == "these") {
          scratch = plural ? "these" : "this";
        } else {
          out += c;
          ++pos;
          continue;
        }
        out += value ? *value : scratch;
        pos = close + 1;
        continue;
      }
    } else if (c == '[' && tmpl.fixed_arity()) {
      bool replaced = false;
      for (std::size_t i = 0; i < slots; ++i) {
        const std::string marker = slot_marker(i + 1);
        if (body.compare(pos, marker.size(), marker) == 0) {
          out += shown(i);
          pos += marker.size();
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out += c;
    ++pos;
  }
  return spec;
}

std::size_t export_sft(std::span<const SftRecord> records, std::ostream& out,
                       const PromptTemplate& tmpl, const PromptOptions& options) {
  std::set<std::string_view> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.nbest.utterance_id).second) {
      throw InvalidArgument("duplicate utterance id \"" + r.nbest.utterance_id + "\"");
    }
    if (r.reference.empty()) {
      throw InvalidArgument("empty reference for utterance \"" + r.nbest.utterance_id + "\"");
    }
  }
  std::size_t lines = 0;
  for (const auto& r : records) {
    const PromptSpec spec =
        build_prompt(r.nbest, r.kb_pairs, seed_for_utterance(r.nbest.utterance_id), tmpl, options);
    nlohmann::json row = {{"prompt", spec.rendered}, {"target", r.reference}};
    out << row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    ++lines;
  }
  return lines;
}

}  // namespace goaec::prompt
