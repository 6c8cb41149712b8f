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

// Byte-level text helpers shared by the embedder, the biaser matcher and
// the morphers. Case folding is ASCII only; every byte >= 0x80 is treated
// as a word character so non-Latin scripts tokenize as words and are never
// split mid-character.

#include <algorithm>
#include <iterator>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biaslens::text {

inline char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string fold(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](char c) { return fold(c); });
  return out;
}

inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
         (u >= '0' && u <= '9') || u >= 0x80;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct Token {
  std::size_t begin = 0;  // byte offset
  std::size_t end = 0;    // one past the last byte
  std::string folded;
};

// Maximal runs of word bytes, in text order.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_byte(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_byte(s[j])) ++j;
    out.push_back({i, j, fold(s.substr(i, j - i))});
    i = j;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::string_view trim_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Number of Unicode scalars in a UTF-8 string (continuation bytes skipped).
inline std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

// Byte offset of the scalar with index `chars`, or s.size() when past the end.
inline std::size_t utf8_offset(std::string_view s, std::size_t chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == chars) return i;
      ++seen;
    }
  }
  return s.size();
}

inline std::string utf8_prefix(std::string_view s, std::size_t chars) {
  return std::string(s.substr(0, utf8_offset(s, chars)));
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Function words excluded from "content tokens" by the morphers.
inline bool is_stopword(std::string_view folded) {
  static constexpr std::string_view kWords[] = {
      "a",    "an",    "the",   "and",  "or",    "but",  "if",   "then", "of",
      "to",   "in",    "on",    "at",   "by",    "for",  "with", "from", "as",
      "is",   "are",   "was",   "were", "be",    "been", "being", "it",  "its",
      "this", "that",  "these", "those", "he",   "she",  "they", "them", "his",
      "her",  "their", "we",    "us",   "our",   "you",  "your", "i",    "me",
      "my",   "not",   "no",    "so",   "than",  "too",  "very", "can",  "will",
      "just", "do",    "does",  "did",  "has",   "have", "had"};
  return std::find(std::begin(kWords), std::end(kWords), folded) != std::end(kWords);
}

}  // namespace biaslens::text
