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

// Bias-producer dataset augmentation.
//
// Stage 1 sweeps every entry for the first biaser of each producer and emits
// one recopy per other member of the biaser set, with only that occurrence
// swapped. Stage 2 applies content morphism to every entry present after
// stage 1: an upshifted (expanded / reworded) copy and a downshifted
// (summarized) copy are both appended.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/embed.hpp"
#include "biaslens/error.hpp"
#include "biaslens/http.hpp"
#include "biaslens/random.hpp"
#include "biaslens/text.hpp"
#include "json.hpp"

namespace biaslens {

enum class MatchMode { kWordBoundaryCaseInsensitive, kExact };

inline std::string_view to_string(MatchMode m) {
  return m == MatchMode::kExact ? "exact" : "word_boundary_case_insensitive";
}

inline MatchMode parse_match_mode(std::string_view s) {
  if (s == "exact") return MatchMode::kExact;
  if (s == "word_boundary_case_insensitive" || s == "word_boundary" || s.empty()) {
    return MatchMode::kWordBoundaryCaseInsensitive;
  }
  fail(ErrorKind::kParse, "unknown match_mode '" + std::string(s) + "'");
}

struct BiasProducer {
  std::string name;
  std::vector<std::string> biasers;
  MatchMode match_mode = MatchMode::kWordBoundaryCaseInsensitive;

  void validate() const {
    require(biasers.size() >= 2, ErrorKind::kInvalidArgument,
            "bias producer '" + name + "' needs at least two biasers");
    std::unordered_set<std::string> seen;
    for (const auto& b : biasers) {
      require(!b.empty(), ErrorKind::kInvalidArgument,
              "bias producer '" + name + "' has an empty biaser");
      require(seen.insert(text::fold(b)).second, ErrorKind::kInvalidArgument,
              "bias producer '" + name + "': biaser '" + b + "' is duplicated");
    }
  }
};

inline BiasProducer producer_from_json(const nlohmann::json& j) {
  try {
    BiasProducer p;
    p.name = j.at("name").get<std::string>();
    p.biasers = j.at("biasers").get<std::vector<std::string>>();
    if (auto m = j.find("match_mode"); m != j.end()) {
      p.match_mode = parse_match_mode(m->get<std::string>());
    }
    return p;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::kParse, std::string("bias producer: ") + ex.what());
  }
}

// A producer file holds one producer object or an array of them.
inline std::vector<BiasProducer> load_producers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::kParse, path.string() + ": malformed JSON: " + ex.what());
  }
  std::vector<BiasProducer> out;
  try {
    if (j.is_array()) {
      for (const auto& item : j) out.push_back(producer_from_json(item));
    } else {
      out.push_back(producer_from_json(j));
    }
    for (const auto& p : out) p.validate();
  } catch (const Error& ex) {
    fail(ErrorKind::kParse, path.string() + ": " + ex.what());
  }
  require(!out.empty(), ErrorKind::kParse, path.string() + ": no bias producers");
  return out;
}

struct BiaserMatch {
  std::size_t biaser_index = 0;
  std::size_t char_begin = 0;  // Unicode scalar offsets
  std::size_t char_end = 0;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
};

namespace detail {

inline bool matches_at(std::string_view s, std::size_t pos, std::string_view biaser,
                       MatchMode mode) {
  if (pos + biaser.size() > s.size()) return false;
  if (mode == MatchMode::kExact) return s.compare(pos, biaser.size(), biaser) == 0;
  for (std::size_t i = 0; i < biaser.size(); ++i) {
    if (text::fold(s[pos + i]) != text::fold(biaser[i])) return false;
  }
  const std::size_t end = pos + biaser.size();
  const bool left_ok = pos == 0 || !text::is_word_byte(s[pos - 1]);
  const bool right_ok = end == s.size() || !text::is_word_byte(s[end]);
  return left_ok && right_ok;
}

inline bool is_char_start(std::string_view s, std::size_t pos) {
  return pos >= s.size() || (static_cast<unsigned char>(s[pos]) & 0xC0) != 0x80;
}

// Leftmost-longest match starting at or after byte `from`.
inline std::optional<BiaserMatch> match_from(std::string_view s, const BiasProducer& p,
                                             std::size_t from) {
  for (std::size_t pos = from; pos < s.size(); ++pos) {
    if (!is_char_start(s, pos)) continue;
    std::optional<BiaserMatch> best;
    for (std::size_t b = 0; b < p.biasers.size(); ++b) {
      const auto& biaser = p.biasers[b];
      if (!matches_at(s, pos, biaser, p.match_mode)) continue;
      if (!best || biaser.size() > best->byte_end - best->byte_begin) {
        best = BiaserMatch{b, 0, 0, pos, pos + biaser.size()};
      }
    }
    if (best) {
      best->char_begin = text::utf8_length(s.substr(0, best->byte_begin));
      best->char_end = best->char_begin +
                       text::utf8_length(s.substr(best->byte_begin,
                                                  best->byte_end - best->byte_begin));
      return best;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Leftmost match; at the same start the longest biaser wins, then the lowest
// index.
inline std::optional<BiaserMatch> find_first_biaser(std::string_view s,
                                                    const BiasProducer& producer) {
  return detail::match_from(s, producer, 0);
}

inline std::vector<BiaserMatch> find_all_biasers(std::string_view s,
                                                 const BiasProducer& producer) {
  std::vector<BiaserMatch> out;
  std::size_t from = 0;
  while (auto m = detail::match_from(s, producer, from)) {
    from = m->byte_end;
    out.push_back(*m);
  }
  return out;
}

// |b| - 1 recopies of `entry`, one per other biaser in list order, with only
// the first occurrence replaced. Ids are "<source>-sub-<n>", n counting from
// `first_ordinal`.
inline std::vector<CorpusEntry> substitute_variants(const CorpusEntry& entry,
                                                    const BiasProducer& producer,
                                                    std::size_t first_ordinal = 1) {
  const auto match = find_first_biaser(entry.text, producer);
  if (!match) return {};
  const std::string_view s = entry.text;
  const std::string prefix(s.substr(0, match->byte_begin));
  const std::string suffix(s.substr(match->byte_end));
  const std::string matched(s.substr(match->byte_begin, match->byte_end - match->byte_begin));
  std::vector<CorpusEntry> out;
  out.reserve(producer.biasers.size() - 1);
  std::size_t ordinal = first_ordinal;
  for (std::size_t j = 0; j < producer.biasers.size(); ++j) {
    if (j == match->biaser_index) continue;
    CorpusEntry v;
    v.id = entry.id + "-sub-" + std::to_string(ordinal++);
    v.text = prefix + producer.biasers[j] + suffix;
    v.meta = entry.meta;
    v.meta["origin"] = "substitution";
    v.meta["source"] = entry.id;
    v.meta["producer"] = producer.name;
    v.meta["biaser"] = producer.biasers[j];
    v.meta["replaced"] = matched;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Content morphism
// ---------------------------------------------------------------------------

enum class MorphProvider { kRemote, kFallback };

struct MorphConfig {
  bool upshift_enabled = true;
  bool downshift_enabled = true;
  double downshift_ratio = 0.3;
  double upshift_rate = 0.15;
  MorphProvider provider = MorphProvider::kFallback;
  std::string endpoint;  // remote only
  std::chrono::milliseconds timeout{30000};
  std::uint64_t seed = 42;

  void validate() const {
    require(downshift_ratio > 0.0 && downshift_ratio <= 1.0, ErrorKind::kInvalidArgument,
            "downshift_ratio must lie in (0, 1]");
    require(upshift_rate > 0.0 && upshift_rate <= 1.0, ErrorKind::kInvalidArgument,
            "upshift_rate must lie in (0, 1]");
    if (provider == MorphProvider::kRemote && (upshift_enabled || downshift_enabled)) {
      require(!endpoint.empty(), ErrorKind::kInvalidArgument,
              "remote morph provider needs an endpoint");
    }
  }
};

struct MorphOutput {
  std::string text;
  bool noop = false;  // output equals input
};

// Lowercased words, one per line; duplicates and blank lines dropped.
struct Lexicon {
  std::vector<std::string> words;

  static Lexicon from_words(std::span<const std::string> raw) {
    Lexicon lex;
    std::unordered_set<std::string> seen;
    for (const auto& w : raw) {
      std::string f = text::fold(text::trim(w));
      if (!f.empty() && seen.insert(f).second) lex.words.push_back(std::move(f));
    }
    return lex;
  }

  static Lexicon load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::kIo, "cannot open lexicon " + path.string());
    std::vector<std::string> raw;
    std::string line;
    while (std::getline(in, line)) raw.push_back(line);
    Lexicon lex = from_words(raw);
    require(!lex.words.empty(), ErrorKind::kParse, path.string() + ": lexicon is empty");
    return lex;
  }
};

namespace detail {

inline std::string remote_morph(const MorphConfig& cfg, std::string_view task,
                                const std::string& input) {
  nlohmann::json body;
  body["task"] = task;
  body["text"] = input;
  const auto res = http::post_json(cfg.endpoint, body, {.timeout = cfg.timeout});
  const auto t = res.find("text");
  require(t != res.end() && t->is_string() && !text::trim(t->get<std::string>()).empty(),
          ErrorKind::kProvider, cfg.endpoint + ": " + std::string(task) +
                                    " response lacks a non-empty \"text\"");
  return t->get<std::string>();
}

inline std::string match_case(std::string_view original, std::string replacement) {
  auto upper = [](char c) { return c >= 'a' && c <= 'z' ? static_cast<char>(c - 32) : c; };
  const bool first_upper = !original.empty() && original[0] >= 'A' && original[0] <= 'Z';
  const bool all_upper =
      original.size() > 1 && std::all_of(original.begin(), original.end(), [](char c) {
        return !(c >= 'a' && c <= 'z');
      }) && first_upper;
  if (all_upper) {
    std::transform(replacement.begin(), replacement.end(), replacement.begin(), upper);
  } else if (first_upper && !replacement.empty()) {
    replacement[0] = upper(replacement[0]);
  }
  return replacement;
}

inline bool has_letter(std::string_view folded) {
  return std::any_of(folded.begin(), folded.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || static_cast<unsigned char>(c) >= 0x80;
  });
}

}  // namespace detail

// Upshift by nearest-neighbour word substitution over a lexicon.
//
// Content tokens are tokens that contain a letter, are not stopwords and do
// not overlap any biaser occurrence of the protected producers. A content
// token is substitutable when it occurs in the lexicon. Exactly
// min(S, max(1, round(rate * C))) substitutable tokens are replaced (C =
// content tokens, S = substitutable ones), picked with a per-text RNG. The
// replacement is the lexicon word with the highest embedding cosine to the
// token; ties go to the smallest seeded hash.
class Upshifter {
 public:
  Upshifter(MorphConfig cfg, EmbeddingProviderConfig embed_cfg, EmbeddingCache* cache,
            std::optional<Lexicon> lexicon, std::vector<BiasProducer> protected_producers = {})
      : cfg_(std::move(cfg)),
        embed_cfg_(std::move(embed_cfg)),
        cache_(cache),
        lexicon_(std::move(lexicon)),
        protected_(std::move(protected_producers)) {
    cfg_.validate();
    if (cfg_.provider == MorphProvider::kFallback) {
      require(lexicon_.has_value() && !lexicon_->words.empty(), ErrorKind::kInvalidArgument,
              "fallback upshift needs a lexicon");
      require(cache_ != nullptr, ErrorKind::kInvalidArgument,
              "fallback upshift needs an embedding cache");
      lexicon_vecs_ = embed_batch(embed_cfg_, *cache_, lexicon_->words);
      for (std::size_t i = 0; i < lexicon_->words.size(); ++i) {
        index_.emplace(lexicon_->words[i], i);
      }
    }
  }

  MorphOutput operator()(const std::string& input) const {
    require(!text::trim(input).empty(), ErrorKind::kInvalidArgument, "upshift: empty text");
    if (cfg_.provider == MorphProvider::kRemote) {
      std::string out = detail::remote_morph(cfg_, "upshift", input);
      const bool same = out == input;
      return {std::move(out), same};
    }
    return fallback(input);
  }

  std::size_t content_token_count(const std::string& input) const {
    return content_tokens(input).size();
  }

 private:
  std::vector<text::Token> content_tokens(const std::string& input) const {
    std::vector<std::pair<std::size_t, std::size_t>> guarded;
    for (const auto& p : protected_) {
      for (const auto& m : find_all_biasers(input, p)) guarded.emplace_back(m.byte_begin, m.byte_end);
    }
    std::vector<text::Token> out;
    for (auto& tok : text::tokenize(input)) {
      if (text::is_stopword(tok.folded) || !detail::has_letter(tok.folded)) continue;
      const bool overlaps = std::any_of(guarded.begin(), guarded.end(), [&](const auto& g) {
        return tok.begin < g.second && g.first < tok.end;
      });
      if (!overlaps) out.push_back(std::move(tok));
    }
    return out;
  }

  MorphOutput fallback(const std::string& input) const {
    const auto content = content_tokens(input);
    std::vector<std::size_t> substitutable;
    for (std::size_t i = 0; i < content.size(); ++i) {
      if (lexicon_->words.size() >= 2 && index_.contains(content[i].folded)) {
        substitutable.push_back(i);
      }
    }
    if (substitutable.empty()) return {input, true};

    const auto wanted = static_cast<std::size_t>(
        std::max<long>(1, std::lround(cfg_.upshift_rate * static_cast<double>(content.size()))));
    const std::size_t n = std::min(substitutable.size(), wanted);
    const std::uint64_t text_seed = derive_seed(cfg_.seed, text::fnv1a64(input));
    Rng rng(text_seed);
    auto picks = rng.sample_without_replacement(substitutable.size(), n);
    std::sort(picks.begin(), picks.end());

    std::string out = input;
    // Right to left keeps earlier byte offsets valid.
    for (auto it = picks.rbegin(); it != picks.rend(); ++it) {
      const auto& tok = content[substitutable[*it]];
      const std::size_t self = index_.at(tok.folded);
      const std::size_t best = nearest_neighbour(self, text_seed);
      const std::string original = input.substr(tok.begin, tok.end - tok.begin);
      out.replace(tok.begin, tok.end - tok.begin,
                  detail::match_case(original, lexicon_->words[best]));
    }
    return {out, out == input};
  }

  std::size_t nearest_neighbour(std::size_t self, std::uint64_t text_seed) const {
    std::size_t best = lexicon_->words.size();
    double best_sim = -2.0;
    std::uint64_t best_key = 0;
    for (std::size_t w = 0; w < lexicon_->words.size(); ++w) {
      if (w == self) continue;
      const double sim = cosine_similarity(lexicon_vecs_[self], lexicon_vecs_[w]);
      const std::uint64_t key = splitmix64(text::fnv1a64(lexicon_->words[w]) ^ text_seed);
      if (sim > best_sim || (sim == best_sim && key < best_key)) {
        best = w;
        best_sim = sim;
        best_key = key;
      }
    }
    return best;
  }

  MorphConfig cfg_;
  EmbeddingProviderConfig embed_cfg_;
  EmbeddingCache* cache_;
  std::optional<Lexicon> lexicon_;
  std::vector<BiasProducer> protected_;
  std::vector<EmbeddingVector> lexicon_vecs_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline MorphOutput upshift(const MorphConfig& cfg, const EmbeddingProviderConfig& embed_cfg,
                           EmbeddingCache& cache, const std::optional<Lexicon>& lexicon,
                           const std::string& input,
                           std::vector<BiasProducer> protected_producers = {}) {
  return Upshifter(cfg, embed_cfg, &cache, lexicon, std::move(protected_producers))(input);
}

using TermFrequency = std::unordered_map<std::string, std::size_t>;

inline TermFrequency term_frequency(std::span<const std::string> texts) {
  TermFrequency tf;
  for (const auto& t : texts) {
    for (const auto& tok : text::tokenize(t)) {
      if (!text::is_stopword(tok.folded)) ++tf[tok.folded];
    }
  }
  return tf;
}

// Sentences end at a run of '.', '!' or '?' followed by whitespace or the end
// of the text. Returned trimmed; blank pieces are dropped.
inline std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto piece = text::trim(s.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    while (i + 1 < s.size() && (s[i + 1] == '.' || s[i + 1] == '!' || s[i + 1] == '?')) ++i;
    if (i + 1 == s.size() || text::is_space(s[i + 1])) flush(i + 1);
  }
  flush(s.size());
  return out;
}

// Sentence score: summed term frequency of its content tokens divided by its
// token count.
inline double sentence_score(std::string_view sentence, const TermFrequency& tf) {
  const auto toks = text::tokenize(sentence);
  if (toks.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : toks) {
    if (text::is_stopword(t.folded)) continue;
    if (auto it = tf.find(t.folded); it != tf.end()) sum += static_cast<double>(it->second);
  }
  return sum / static_cast<double>(toks.size());
}

// Extractive summary: the top ceil(ratio * #sentences) sentences by score,
// earlier sentences first on ties, re-emitted in text order joined by a
// space. `tf` defaults to the text's own term frequencies.
inline MorphOutput downshift(const MorphConfig& cfg, const std::string& input,
                             const TermFrequency* tf = nullptr) {
  require(!text::trim(input).empty(), ErrorKind::kInvalidArgument, "downshift: empty text");
  if (cfg.provider == MorphProvider::kRemote) {
    std::string out = detail::remote_morph(cfg, "downshift", input);
    const bool same = out == input;
    return {std::move(out), same};
  }
  const auto sentences = split_sentences(input);
  const auto keep = static_cast<std::size_t>(
      std::ceil(cfg.downshift_ratio * static_cast<double>(sentences.size())));
  if (keep >= sentences.size()) return {input, true};

  TermFrequency local;
  if (tf == nullptr) {
    local = term_frequency(std::span<const std::string>(&input, 1));
    tf = &local;
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    ranked.emplace_back(sentence_score(sentences[i], *tf), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < keep; ++i) chosen.push_back(ranked[i].second);
  std::sort(chosen.begin(), chosen.end());
  std::string out;
  for (std::size_t i : chosen) {
    if (!out.empty()) out += ' ';
    out += sentences[i];
  }
  return {out, out == input};
}

// ---------------------------------------------------------------------------
// Whole-corpus augmentation
// ---------------------------------------------------------------------------

enum class Origin { kOriginal, kSubstitution, kUpshift, kDownshift };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::kOriginal: return "original";
    case Origin::kSubstitution: return "substitution";
    case Origin::kUpshift: return "upshift";
    case Origin::kDownshift: return "downshift";
  }
  return "unknown";
}

struct AugmentationRecord {
  std::string output_entry_id;
  std::string source_entry_id;
  Origin origin = Origin::kOriginal;
  std::optional<std::string> producer_name;
  std::optional<std::string> biaser_used;
};

struct AugmentResult {
  Corpus corpus;
  std::vector<AugmentationRecord> records;

  std::size_t count(Origin o) const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [o](const auto& r) { return r.origin == o; }));
  }
};

// Everything the morph stage needs besides its config.
struct MorphContext {
  EmbeddingProviderConfig embed;
  EmbeddingCache* cache = nullptr;
  std::optional<Lexicon> lexicon;
};

inline AugmentResult augment_corpus(const Corpus& corpus,
                                    const std::vector<BiasProducer>& producers,
                                    const MorphConfig& morph, const MorphContext& ctx) {
  require(!producers.empty(), ErrorKind::kInvalidArgument, "augment: no bias producers");
  for (const auto& p : producers) p.validate();
  morph.validate();

  AugmentResult res;
  res.corpus.name = corpus.name;
  auto& out = res.corpus.entries;

  for (const auto& e : corpus.entries) {
    out.push_back(e);
    res.records.push_back({e.id, e.id, Origin::kOriginal, std::nullopt, std::nullopt});
  }
  for (const auto& e : corpus.entries) {
    std::size_t ordinal = 1;
    for (const auto& p : producers) {
      auto variants = substitute_variants(e, p, ordinal);
      ordinal += variants.size();
      for (auto& v : variants) {
        res.records.push_back(
            {v.id, e.id, Origin::kSubstitution, p.name, v.meta.at("biaser")});
        out.push_back(std::move(v));
      }
    }
  }

  const bool any_morph = morph.upshift_enabled || morph.downshift_enabled;
  if (any_morph) {
    const std::size_t base = out.size();
    std::vector<std::string> base_texts;
    for (std::size_t i = 0; i < base; ++i) base_texts.push_back(out[i].text);
    const TermFrequency tf = term_frequency(base_texts);

    std::optional<Upshifter> up;
    if (morph.upshift_enabled) {
      up.emplace(morph, ctx.embed, ctx.cache, ctx.lexicon, producers);
    }

    for (std::size_t i = 0; i < base; ++i) {
      const CorpusEntry src = out[i];
      auto add = [&](Origin origin, std::string_view suffix, MorphOutput m) {
        CorpusEntry e;
        e.id = src.id + std::string(suffix);
        e.text = std::move(m.text);
        e.meta = src.meta;
        e.meta["origin"] = std::string(to_string(origin));
        e.meta["source"] = src.id;
        if (m.noop) e.meta[std::string(to_string(origin))] = "noop";
        res.records.push_back({e.id, src.id, origin, std::nullopt, std::nullopt});
        out.push_back(std::move(e));
      };
      try {
        if (up) add(Origin::kUpshift, "-up", (*up)(src.text));
        if (morph.downshift_enabled) add(Origin::kDownshift, "-down", downshift(morph, src.text, &tf));
      } catch (const Error& ex) {
        fail(ex.kind(), "augment: entry '" + src.id + "': " + ex.what());
      }
    }
  }

  validate_corpus(res.corpus);
  return res;
}

}  // namespace biaslens
