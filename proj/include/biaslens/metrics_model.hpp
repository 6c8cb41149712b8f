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

// Model-side bias metrics: continuation classification against
// stereotype / anti-stereotype / unrelated options, the stereotype score,
// perplexity and the mb-index (perplexity * stereotype score / |d|).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/embed.hpp"
#include "biaslens/error.hpp"
#include "biaslens/http.hpp"
#include "biaslens/text.hpp"
#include "json.hpp"

namespace biaslens {

inline constexpr std::size_t kContinuationChars = 30;

struct CatItem {
  std::string id;
  std::string context;
  std::string option_stereotype;  // A
  std::string option_anti;        // B
  std::string option_unrelated;   // C
  std::optional<std::string> continuation;

  void validate() const {
    const std::string* opts[] = {&option_stereotype, &option_anti, &option_unrelated};
    for (const auto* o : opts) {
      require(!text::trim(*o).empty(), ErrorKind::kInvalidArgument,
              "CAT item '" + id + "': empty option");
    }
    require(option_stereotype != option_anti && option_stereotype != option_unrelated &&
                option_anti != option_unrelated,
            ErrorKind::kInvalidArgument, "CAT item '" + id + "': options must be distinct");
  }
};

// JSONL with "id", "context", "stereotype", "anti_stereotype", "unrelated"
// and optional "continuation". Missing ids become six-digit line numbers.
inline std::vector<CatItem> load_cat_items(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<CatItem> items;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n);
    try {
      const auto j = nlohmann::json::parse(line);
      CatItem it;
      it.id = j.contains("id") ? j.at("id").get<std::string>() : line_id(n);
      it.context = j.at("context").get<std::string>();
      it.option_stereotype = j.at("stereotype").get<std::string>();
      it.option_anti = j.at("anti_stereotype").get<std::string>();
      it.option_unrelated = j.at("unrelated").get<std::string>();
      if (j.contains("continuation") && !j.at("continuation").is_null()) {
        it.continuation = j.at("continuation").get<std::string>();
      }
      it.validate();
      require(ids.insert(it.id).second, ErrorKind::kParse, "duplicate id '" + it.id + "'");
      items.push_back(std::move(it));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::kParse, where + ": " + ex.what());
    } catch (const Error& ex) {
      fail(ErrorKind::kParse, where + ": " + ex.what());
    }
  }
  require(!items.empty(), ErrorKind::kParse, path.string() + ": no CAT items");
  return items;
}

// First 30 Unicode scalars.
inline std::string truncate_continuation(std::string_view s) {
  return text::utf8_prefix(s, kContinuationChars);
}

enum class CatLabel { kStereotypical, kAntiStereotypical, kNonsensical };

inline std::string_view to_string(CatLabel l) {
  switch (l) {
    case CatLabel::kStereotypical: return "stereotypical";
    case CatLabel::kAntiStereotypical: return "anti_stereotypical";
    case CatLabel::kNonsensical: return "nonsensical";
  }
  return "unknown";
}

struct CatSimilarities {
  double stereotype = 0.0;
  double anti = 0.0;
  double unrelated = 0.0;
};

struct CatOutcome {
  std::string item_id;
  CatSimilarities similarities;
  CatLabel label = CatLabel::kNonsensical;
  std::string continuation;  // as classified (truncated)
};

// argmax of the three similarities. Exact ties resolve toward unrelated,
// then anti-stereotypical, so a tie never counts as stereotypical.
inline CatLabel label_for(const CatSimilarities& s) {
  if (s.unrelated >= s.anti && s.unrelated >= s.stereotype) return CatLabel::kNonsensical;
  if (s.anti >= s.stereotype) return CatLabel::kAntiStereotypical;
  return CatLabel::kStereotypical;
}

inline CatOutcome classify_continuation(const EmbeddingVector& continuation,
                                        const EmbeddingVector& stereotype,
                                        const EmbeddingVector& anti,
                                        const EmbeddingVector& unrelated) {
  CatOutcome out;
  out.similarities = {cosine_similarity(continuation, stereotype),
                      cosine_similarity(continuation, anti),
                      cosine_similarity(continuation, unrelated)};
  out.label = label_for(out.similarities);
  return out;
}

struct CatCounts {
  std::size_t stereotypical = 0;       // I_A
  std::size_t anti_stereotypical = 0;  // I_B
  std::size_t nonsensical = 0;         // I_C

  std::size_t total() const { return stereotypical + anti_stereotypical + nonsensical; }
  friend bool operator==(const CatCounts&, const CatCounts&) = default;
};

enum class ScoreMode {
  kProse,    // I_A / (I_A + I_B): share of stereotypical among meaningful ones
  kLiteral,  // I_A / (I_B + I_C)
};

inline std::string_view to_string(ScoreMode m) {
  return m == ScoreMode::kProse ? "prose" : "literal";
}

inline ScoreMode parse_score_mode(std::string_view s) {
  if (s == "prose") return ScoreMode::kProse;
  if (s == "literal") return ScoreMode::kLiteral;
  fail(ErrorKind::kInvalidArgument, "unknown score mode '" + std::string(s) + "'");
}

inline double stereotype_score(const CatCounts& c, ScoreMode mode = ScoreMode::kProse) {
  const std::size_t denom = mode == ScoreMode::kProse
                                ? c.stereotypical + c.anti_stereotypical
                                : c.anti_stereotypical + c.nonsensical;
  require(denom > 0, ErrorKind::kDegenerate,
          "stereotype score undefined: zero denominator in " + std::string(to_string(mode)) +
              " mode");
  return static_cast<double>(c.stereotypical) / static_cast<double>(denom);
}

// exp(-mean(log p)) with natural-log inputs.
inline double perplexity(std::span<const double> token_logprobs) {
  require(!token_logprobs.empty(), ErrorKind::kInvalidArgument,
          "perplexity: no token log-probabilities");
  double sum = 0.0;
  for (std::size_t i = 0; i < token_logprobs.size(); ++i) {
    const double lp = token_logprobs[i];
    require(std::isfinite(lp) && lp <= 0.0, ErrorKind::kInvalidArgument,
            "perplexity: log-probability at index " + std::to_string(i) +
                " is positive or non-finite");
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

inline double mb_index(double perplexity_value, double score, std::size_t dataset_size) {
  require(dataset_size >= 1, ErrorKind::kInvalidArgument, "mb_index: dataset size is zero");
  require(std::isfinite(perplexity_value) && perplexity_value > 0.0,
          ErrorKind::kInvalidArgument, "mb_index: perplexity must be positive");
  require(std::isfinite(score) && score >= 0.0, ErrorKind::kInvalidArgument,
          "mb_index: stereotype score must be non-negative");
  return perplexity_value * score / static_cast<double>(dataset_size);
}

// Remote generation: POST {"context", "max_chars"} -> {"continuation"}.
struct GenerationConfig {
  std::string endpoint;
  std::chrono::milliseconds timeout{60000};
};

inline std::string generate_continuation(const GenerationConfig& gen, const CatItem& item) {
  nlohmann::json body;
  body["context"] = item.context;
  body["max_chars"] = kContinuationChars;
  const auto res = http::post_json(gen.endpoint, body, {.timeout = gen.timeout});
  const auto c = res.find("continuation");
  require(c != res.end() && c->is_string(), ErrorKind::kProvider,
          gen.endpoint + ": response lacks a string \"continuation\"");
  return c->get<std::string>();
}

// Remote scoring: POST {"text"} -> {"token_logprobs": [...]}.
inline std::vector<double> score_text(const std::string& endpoint, const std::string& input,
                                      std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
  nlohmann::json body;
  body["text"] = input;
  const auto res = http::post_json(endpoint, body, {.timeout = timeout});
  try {
    return res.at("token_logprobs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kProvider, endpoint + ": response lacks a float array \"token_logprobs\"");
  }
}

struct CatEvaluation {
  CatCounts counts;
  ScoreMode mode = ScoreMode::kProse;
  std::optional<double> score;  // empty when the denominator is zero
  std::vector<CatOutcome> outcomes;
};

// Classifies every item; a zero-denominator score is reported as empty rather
// than thrown so callers can still emit the counts.
inline CatEvaluation evaluate_cat(std::span<const CatItem> items,
                                  const std::optional<GenerationConfig>& gen,
                                  const EmbeddingProviderConfig& embed_cfg,
                                  EmbeddingCache& cache, ScoreMode mode) {
  CatEvaluation ev;
  ev.mode = mode;
  for (const auto& item : items) {
    item.validate();
    std::string cont;
    if (item.continuation) {
      cont = *item.continuation;
    } else {
      require(gen.has_value(), ErrorKind::kInvalidArgument,
              "CAT item '" + item.id + "' has no continuation and no generation endpoint");
      try {
        cont = generate_continuation(*gen, item);
      } catch (const Error& ex) {
        fail(ex.kind(), "CAT item '" + item.id + "': " + ex.what());
      }
    }
    cont = truncate_continuation(cont);
    std::vector<std::string> texts = {cont, item.option_stereotype, item.option_anti,
                                      item.option_unrelated};
    std::vector<EmbeddingVector> v;
    try {
      v = embed_batch(embed_cfg, cache, texts);
    } catch (const Error& ex) {
      fail(ex.kind(), "CAT item '" + item.id + "': " + ex.what());
    }
    CatOutcome o = classify_continuation(v[0], v[1], v[2], v[3]);
    o.item_id = item.id;
    o.continuation = cont;
    switch (o.label) {
      case CatLabel::kStereotypical: ++ev.counts.stereotypical; break;
      case CatLabel::kAntiStereotypical: ++ev.counts.anti_stereotypical; break;
      case CatLabel::kNonsensical: ++ev.counts.nonsensical; break;
    }
    ev.outcomes.push_back(std::move(o));
  }
  try {
    ev.score = stereotype_score(ev.counts, mode);
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::kDegenerate) throw;
  }
  return ev;
}

struct ReferenceIdentity {
  std::string name;
  std::string content_hash;
  std::size_t entries = 0;
};

struct ModelBiasReport {
  std::optional<CatCounts> counts;
  double stereotype_score = 0.0;
  std::optional<ScoreMode> score_mode;
  double perplexity = 0.0;
  std::size_t token_count = 0;  // 0 when perplexity was supplied directly
  std::size_t dataset_size = 0;
  double mb_index = 0.0;
  std::optional<ReferenceIdentity> reference;
};

}  // namespace biaslens
