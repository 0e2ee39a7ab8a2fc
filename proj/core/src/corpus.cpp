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

#include "goaec/corpus.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "goaec/error.hpp"

namespace goaec::corpus {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

}  // namespace

std::vector<UtteranceRecord> read_corpus(std::istream& in, const std::string& source_name,
                                         const ReadOptions& options) {
  std::vector<UtteranceRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    UtteranceRecord r;
    try {
      const json j = json::parse(line);
      r.id = j.at("id").get<std::string>();
      r.reference = j.value("reference", std::string());
      r.context = j.value("context", std::string());
      if (j.contains("hypotheses")) {
        for (const json& h : j.at("hypotheses")) {
          r.hypotheses.push_back({h.at("source_id").get<std::string>(), h.at("text").get<std::string>()});
        }
      }
      if (j.contains("audio_path") && !j.at("audio_path").is_null()) {
        r.audio_path = j.at("audio_path").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (r.id.empty()) throw ParseError(source_name, line_no, "empty id");
    if (options.require_reference && r.reference.empty()) {
      throw ParseError(source_name, line_no, "utterance \"" + r.id + "\" has no reference");
    }
    if (!ids.insert(r.id).second) throw ParseError(source_name, line_no, "duplicate id \"" + r.id + "\"");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<UtteranceRecord> read_corpus(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return read_corpus(in, path.string(), options);
}

std::string to_json_line(const UtteranceRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["reference"] = r.reference;
  ordered_json hyps = ordered_json::array();
  for (const auto& h : r.hypotheses) hyps.push_back({{"source_id", h.source_id}, {"text", h.text}});
  j["hypotheses"] = std::move(hyps);
  j["context"] = r.context;
  if (r.audio_path) j["audio_path"] = *r.audio_path;
  return dump_line(j);
}

void write_corpus(std::span<const UtteranceRecord> records, std::ostream& out) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_corpus(std::span<const UtteranceRecord> records, const std::filesystem::path& path) {
  std::ostringstream out;
  write_corpus(records, out);
  write_file_atomic(path, out.str());
}

void TextCorpus::validate() const {
  std::set<std::string_view> ids;
  for (const auto& item : items) {
    if (item.id.empty()) throw InvalidArgument("text item with empty id");
    if (item.text.empty()) throw InvalidArgument("text item \"" + item.id + "\" is empty");
    if (!ids.insert(item.id).second) throw InvalidArgument("duplicate text id \"" + item.id + "\"");
  }
}

TextCorpus read_text_corpus(std::istream& in, const std::string& source_name) {
  TextCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TextItem item;
    try {
      const json j = json::parse(line);
      item.id = j.at("id").get<std::string>();
      item.text = j.at("text").get<std::string>();
      item.context = j.value("context", std::string());
      if (j.contains("tags")) item.tags = j.at("tags").get<std::vector<std::string>>();
      if (j.value("provenance", std::string("seed")) == "llm_expanded") item.provenance = Provenance::LlmExpanded;
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    corpus.items.push_back(std::move(item));
  }
  try {
    corpus.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(source_name + ": " + e.what());
  }
  return corpus;
}

TextCorpus read_text_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open text corpus " + path.string());
  return read_text_corpus(in, path.string());
}

void write_text_corpus(const TextCorpus& corpus, std::ostream& out) {
  for (const auto& item : corpus.items) {
    ordered_json j;
    j["id"] = item.id;
    j["text"] = item.text;
    j["tags"] = item.tags;
    if (!item.context.empty()) j["context"] = item.context;
    j["provenance"] = item.provenance == Provenance::Seed ? "seed" : "llm_expanded";
    out << dump_line(j) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace goaec::corpus
