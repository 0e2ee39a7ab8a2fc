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

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "goaec/promptgen.hpp"

namespace goaec::corpus {

// One corpus row. Stored as line-delimited JSON:
//   {"id": ..., "reference": ..., "hypotheses": [{"source_id", "text"}],
//    "context": ..., "audio_path": ...}
struct UtteranceRecord {
  std::string id;
  std::string reference;
  std::vector<prompt::Hypothesis> hypotheses;
  std::string context;
  std::optional<std::string> audio_path;

  prompt::NBestSet nbest() const { return {hypotheses, context, id}; }
  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct ReadOptions {
  bool require_reference = true;
};

// Throws ParseError (with line number) on malformed rows, duplicate ids, or
// missing references when required.
std::vector<UtteranceRecord> read_corpus(std::istream& in, const std::string& source_name = "<stream>",
                                         const ReadOptions& options = {});
std::vector<UtteranceRecord> read_corpus(const std::filesystem::path& path, const ReadOptions& options = {});

std::string to_json_line(const UtteranceRecord& record);
void write_corpus(std::span<const UtteranceRecord> records, std::ostream& out);
void write_corpus(std::span<const UtteranceRecord> records, const std::filesystem::path& path);

// Seed or expanded text for augmentation and simulation.
enum class Provenance { Seed, LlmExpanded };

struct TextItem {
  std::string id;
  std::string text;
  std::vector<std::string> tags;
  std::string context;
  Provenance provenance = Provenance::Seed;
};

struct TextCorpus {
  std::vector<TextItem> items;

  // Throws InvalidArgument on duplicate ids or empty texts.
  void validate() const;
};

// JSONL rows {"id", "text", "tags"?, "context"?, "provenance"?}.
TextCorpus read_text_corpus(std::istream& in, const std::string& source_name = "<stream>");
TextCorpus read_text_corpus(const std::filesystem::path& path);
void write_text_corpus(const TextCorpus& corpus, std::ostream& out);

// Writes `bytes` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace goaec::corpus
