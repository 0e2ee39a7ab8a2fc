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

#include "goaec/asr_sim.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "goaec/error.hpp"
#include "goaec/hash.hpp"
#include "goaec/random.hpp"
#include "goaec/utf8.hpp"

namespace goaec::sim {

void ChannelProfile::validate() const {
  for (double r : {sub_rate, del_rate, ins_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("channel rates must lie in [0, 1]");
  }
  if (sub_rate + del_rate + ins_rate > 1.0 + 1e-12) {
    throw InvalidArgument("channel rates of \"" + source_id + "\" sum past 1");
  }
}

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

class Channel {
 public:
  Channel(const ChannelProfile& profile, std::u32string_view ref, Rng& rng)
      : profile_(profile), rng_(rng) {
    if (!profile.char_pool.empty()) {
      pool_.assign(profile.char_pool.begin(), profile.char_pool.end());
    } else if (profile.lexicon && !profile.lexicon->empty()) {
      pool_ = profile.lexicon->characters();
    }
    std::sort(pool_.begin(), pool_.end());
    pool_.erase(std::unique(pool_.begin(), pool_.end()), pool_.end());

    if (profile.lexicon && !profile.lexicon->empty()) {
      insert_pool_ = profile.lexicon->characters();
    } else if (!pool_.empty()) {
      insert_pool_ = pool_;
    } else {
      insert_pool_.assign(ref.begin(), ref.end());
      std::sort(insert_pool_.begin(), insert_pool_.end());
      insert_pool_.erase(std::unique(insert_pool_.begin(), insert_pool_.end()), insert_pool_.end());
    }
  }

  char32_t substitute(char32_t c) {
    std::vector<char32_t> homophones;
    if (profile_.lexicon) {
      if (const auto* keys = profile_.lexicon->keys(c)) {
        for (const auto& k : *keys) {
          for (char32_t h : profile_.lexicon->chars_for(k)) {
            if (h != c) homophones.push_back(h);
          }
        }
        std::sort(homophones.begin(), homophones.end());
        homophones.erase(std::unique(homophones.begin(), homophones.end()), homophones.end());
      }
    }
    if (!homophones.empty()) return pick(rng_, homophones);

    std::vector<char32_t> others;
    others.reserve(pool_.size());
    for (char32_t p : pool_) {
      if (p != c) others.push_back(p);
    }
    return others.empty() ? c : pick(rng_, others);
  }

  char32_t insertion() { return insert_pool_.empty() ? U'\0' : pick(rng_, insert_pool_); }

 private:
  const ChannelProfile& profile_;
  Rng& rng_;
  std::vector<char32_t> pool_;
  std::vector<char32_t> insert_pool_;
};

}  // namespace

CorruptTrace corrupt_traced(std::string_view ref, const ChannelProfile& profile,
                            std::string_view utterance_id, const CorruptOptions& options) {
  profile.validate();
  const std::u32string chars = utf8::decode(ref);
  Rng rng(hash_fields(std::to_string(profile.seed), utterance_id));
  Channel channel(profile, chars, rng);
  CorruptTrace trace;

  // Term-level confusion: at most one per utterance, on the first occurrence.
  std::size_t term_start = chars.size();
  std::size_t term_end = chars.size();
  std::u32string rendering;
  {
    std::vector<const TermConfusions::value_type*> present;
    for (const auto& entry : profile.term_confusions) {
      if (!entry.second.empty() && !entry.first.empty() && ref.find(entry.first) != std::string_view::npos) {
        present.push_back(&entry);
      }
    }
    const double draw = rng.uniform();
    if (!present.empty() && (options.force_term_hit || draw < profile.sub_rate)) {
      const auto& [term, renderings] = *pick(rng, present);
      const std::string& wrong = pick(rng, renderings);
      const std::u32string term_chars = utf8::decode(term);
      term_start = chars.find(term_chars);
      term_end = term_start + term_chars.size();
      rendering = utf8::decode(wrong);
      trace.term_hit = TermHit{term, wrong, term_start};
    }
  }

  const double sub_cut = profile.sub_rate;
  const double del_cut = sub_cut + profile.del_rate;
  const double ins_cut = del_cut + profile.ins_rate;

  std::u32string out;
  out.reserve(chars.size() + 4);
  char32_t last_deleted = 0;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (i == term_start) {
      out += rendering;
      i = term_end - 1;
      continue;
    }
    const char32_t c = chars[i];
    ++trace.ref_chars;
    const double u = rng.uniform();
    if (u < sub_cut) {
      const char32_t s = channel.substitute(c);
      out.push_back(s);
      if (s != c) ++trace.substitutions;
    } else if (u < del_cut) {
      last_deleted = c;
      ++trace.deletions;
    } else if (u < ins_cut) {
      out.push_back(c);
      if (const char32_t extra = channel.insertion()) {
        out.push_back(extra);
        ++trace.insertions;
      }
    } else {
      out.push_back(c);
    }
  }
  if (out.empty() && !chars.empty()) {
    // Everything was deleted; an ASR service returning nothing is modelled
    // upstream, so keep one character.
    out.push_back(last_deleted ? last_deleted : chars.front());
    if (trace.deletions) --trace.deletions;
  }
  trace.text = utf8::encode(out);
  return trace;
}

prompt::NBestSet simulate_nbest(std::string_view ref, std::span<const ChannelProfile> profiles,
                                std::string_view context, std::string_view utterance_id) {
  if (profiles.empty()) throw InvalidArgument("simulate_nbest needs at least one profile");
  std::set<std::string_view> ids;
  for (const auto& p : profiles) {
    if (!ids.insert(p.source_id).second) {
      throw InvalidArgument("duplicate source id \"" + p.source_id + "\"");
    }
  }
  prompt::NBestSet nbest;
  nbest.context = std::string(context);
  nbest.utterance_id = std::string(utterance_id);
  for (const auto& p : profiles) {
    nbest.hypotheses.push_back({p.source_id, corrupt(ref, p, utterance_id)});
  }
  return nbest;
}

TermConfusions parse_term_confusions(std::istream& in, const std::string& source_name) {
  TermConfusions table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = utf8::trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = view.find('\t', start);
      const auto field = utf8::trim(view.substr(start, tab == std::string_view::npos ? tab : tab - start));
      if (!field.empty()) fields.emplace_back(field);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2) throw ParseError(source_name, line_no, "expected 'term<TAB>rendering...'");
    auto& renderings = table[fields[0]];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i] == fields[0]) throw ParseError(source_name, line_no, "rendering equals the term");
      renderings.push_back(fields[i]);
    }
  }
  return table;
}

TermConfusions load_term_confusions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open term confusion table " + path.string());
  return parse_term_confusions(in, path.string());
}

std::vector<ChannelProfile> parse_profiles(std::string_view json_text,
                                           const std::filesystem::path& base_dir,
                                           std::uint64_t run_seed) {
  using nlohmann::json;
  std::vector<ChannelProfile> profiles;
  std::map<std::filesystem::path, std::shared_ptr<const kb::PhoneticLexicon>> lexicons;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    const json j = json::parse(json_text);
    for (const json& pj : j.at("profiles")) {
      ChannelProfile p;
      p.source_id = pj.at("source_id").get<std::string>();
      p.sub_rate = pj.value("sub_rate", 0.0);
      p.del_rate = pj.value("del_rate", 0.0);
      p.ins_rate = pj.value("ins_rate", 0.0);
      p.seed = pj.value("seed", std::uint64_t{0});
      if (run_seed != 0) p.seed = hash_fields(std::to_string(p.seed), std::to_string(run_seed));
      if (pj.contains("lexicon")) {
        const auto path = resolve(pj.at("lexicon").get<std::string>());
        auto& lex = lexicons[path];
        if (!lex) lex = std::make_shared<const kb::PhoneticLexicon>(kb::PhoneticLexicon::load(path));
        p.lexicon = lex;
      }
      if (pj.contains("term_confusions")) {
        p.term_confusions = load_term_confusions(resolve(pj.at("term_confusions").get<std::string>()));
      }
      if (pj.contains("char_pool")) p.char_pool = utf8::decode(pj.at("char_pool").get<std::string>());
      try {
        p.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      profiles.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("profile config: ") + e.what());
  }
  if (profiles.empty()) throw ConfigError("profile config lists no profiles");
  std::set<std::string> ids;
  for (const auto& p : profiles) {
    if (!ids.insert(p.source_id).second) throw ConfigError("duplicate profile source id \"" + p.source_id + "\"");
  }
  return profiles;
}

std::vector<ChannelProfile> load_profiles(const std::filesystem::path& path, std::uint64_t run_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open profile config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profiles(ss.str(), path.parent_path(), run_seed);
}

}  // namespace goaec::sim
