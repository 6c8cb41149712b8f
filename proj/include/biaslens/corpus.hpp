// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Corpus data model and JSON-Lines I/O.
//
// One UTF-8 JSON object per line:
//   {"id": "...", "text": "...", "meta": {"k": "v", ...}}
// "text" is required; "id" defaults to the 1-based line number padded to six
// digits; "meta" is an optional object of string values. Blank lines are
// skipped but still count toward line numbers.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "biaslens/error.hpp"
#include "biaslens/text.hpp"
#include "json.hpp"

namespace biaslens {

using Meta = std::map<std::string, std::string>;

struct CorpusEntry {
  std::string id;
  std::string text;
  Meta meta;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct Corpus {
  std::string name;
  std::vector<CorpusEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.text);
    return out;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Throws kInvariant on duplicate ids or blank texts.
inline void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    require(seen.insert(e.id).second, ErrorKind::kInvariant,
            "corpus '" + corpus.name + "': duplicate id '" + e.id + "'");
    require(!text::trim(e.text).empty(), ErrorKind::kInvariant,
            "corpus '" + corpus.name + "': entry '" + e.id + "' has empty text");
  }
}

// SHA-256 of the exact UTF-8 bytes, as 64 lowercase hex characters.
struct ContentHash {
  std::string hex;

  friend bool operator==(const ContentHash&, const ContentHash&) = default;
  friend auto operator<=>(const ContentHash&, const ContentHash&) = default;
};

inline ContentHash content_hash(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kInvariant, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return {std::move(hex)};
}

// Identity of a whole corpus: hash over "id\ttext\n" for every entry.
inline ContentHash corpus_hash(const Corpus& corpus) {
  std::string buf;
  for (const auto& e : corpus.entries) {
    buf += e.id;
    buf += '\t';
    buf += e.text;
    buf += '\n';
  }
  return content_hash(buf);
}

inline std::string line_id(std::size_t line_number) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", line_number);
  return buf;
}

inline nlohmann::json entry_to_json(const CorpusEntry& e) {
  nlohmann::json out = nlohmann::json::object();
  out["id"] = e.id;
  out["text"] = e.text;
  if (!e.meta.empty()) out["meta"] = e.meta;
  return out;
}

inline CorpusEntry entry_from_json(const nlohmann::json& j, std::size_t line_number,
                                   const std::string& where) {
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::kParse, where + ":" + std::to_string(line_number) + ": " + what);
  };
  if (!j.is_object()) bad("expected a JSON object");
  CorpusEntry e;
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) bad("missing string field \"text\"");
  e.text = std::string(text::trim_trailing_newlines(text->get<std::string>()));
  if (text::trim(e.text).empty()) bad("field \"text\" is empty");
  if (auto id = j.find("id"); id != j.end()) {
    if (!id->is_string()) bad("field \"id\" must be a string");
    e.id = id->get<std::string>();
  } else {
    e.id = line_id(line_number);
  }
  if (auto meta = j.find("meta"); meta != j.end()) {
    if (!meta->is_object()) bad("field \"meta\" must be an object");
    for (const auto& [k, v] : meta->items()) {
      if (!v.is_string()) bad("meta value for \"" + k + "\" must be a string");
      e.meta[k] = v.get<std::string>();
    }
  }
  return e;
}

inline Corpus parse_corpus(std::istream& in, std::string name, const std::string& where) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      fail(ErrorKind::kParse,
           where + ":" + std::to_string(line_number) + ": malformed JSON: " + ex.what());
    }
    CorpusEntry e = entry_from_json(j, line_number, where);
    if (!ids.insert(e.id).second) {
      fail(ErrorKind::kParse,
           where + ":" + std::to_string(line_number) + ": duplicate id '" + e.id + "'");
    }
    corpus.entries.push_back(std::move(e));
  }
  require(!corpus.entries.empty(), ErrorKind::kParse, where + ": corpus file is empty");
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  return parse_corpus(in, std::move(name), path.string());
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  return load_corpus(path, path.stem().string());
}

inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& e : corpus.entries) out << entry_to_json(e).dump() << '\n';
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  write_corpus(corpus, out);
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace biaslens
