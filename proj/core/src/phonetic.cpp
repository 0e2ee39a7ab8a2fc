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

#include <algorithm>
#include <fstream>

#include "goaec/error.hpp"
#include "goaec/kb.hpp"
#include "goaec/utf8.hpp"

namespace goaec::kb {

std::string strip_tone(std::string_view syllable) {
  std::string out(utf8::trim(syllable));
  while (!out.empty() && out.back() >= '0' && out.back() <= '9') out.pop_back();
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void PhoneticLexicon::add(char32_t c, std::string_view syllable) {
  std::string key = strip_tone(syllable);
  if (key.empty()) throw InvalidArgument("empty phonetic key");
  auto& keys = readings_[c];
  if (std::find(keys.begin(), keys.end(), key) != keys.end()) return;
  keys.push_back(key);

  auto& chars = by_key_[key];
  chars.insert(std::lower_bound(chars.begin(), chars.end(), c), c);
  auto pos = std::lower_bound(characters_.begin(), characters_.end(), c);
  if (pos == characters_.end() || *pos != c) characters_.insert(pos, c);
}

PhoneticLexicon PhoneticLexicon::parse(std::istream& in, const std::string& source_name) {
  PhoneticLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = utf8::trim(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty() || view.front() == '#') continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(source_name, line_no, "expected 'char<TAB>syllable'");
    }
    const std::u32string ch = utf8::decode(utf8::trim(view.substr(0, tab)));
    const std::string_view syllable = utf8::trim(view.substr(tab + 1));
    if (ch.size() != 1 || syllable.empty()) {
      throw ParseError(source_name, line_no, "expected a single character and a syllable");
    }
    lex.add(ch.front(), syllable);
  }
  return lex;
}

PhoneticLexicon PhoneticLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open phonetic lexicon " + path.string());
  return parse(in, path.string());
}

const std::vector<std::string>* PhoneticLexicon::keys(char32_t c) const {
  auto it = readings_.find(c);
  return it == readings_.end() ? nullptr : &it->second;
}

bool PhoneticLexicon::homophones(char32_t a, char32_t b) const {
  const auto* ka = keys(a);
  const auto* kb = keys(b);
  if (!ka || !kb) return false;
  for (const auto& k : *ka) {
    if (std::find(kb->begin(), kb->end(), k) != kb->end()) return true;
  }
  return false;
}

const std::vector<char32_t>& PhoneticLexicon::chars_for(const std::string& key) const {
  static const std::vector<char32_t> kNone;
  auto it = by_key_.find(key);
  return it == by_key_.end() ? kNone : it->second;
}

std::vector<std::string> gen_phonetic_variants(std::string_view term, const PhoneticLexicon& lexicon,
                                               std::u32string_view pool) {
  const std::u32string chars = utf8::decode(term);
  std::u32string candidates(pool);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::string> out;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    for (char32_t c : candidates) {
      if (c == chars[i] || !lexicon.homophones(chars[i], c)) continue;
      std::u32string variant = chars;
      variant[i] = c;
      std::string encoded = utf8::encode(variant);
      if (std::find(out.begin(), out.end(), encoded) == out.end()) out.push_back(std::move(encoded));
    }
  }
  return out;
}

}  // namespace goaec::kb
