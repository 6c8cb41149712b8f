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

// JSON forms of every report. Schemas live in schemas/*.schema.json; bump
// the version suffix of the matching kSchema* constant on any breaking
// change.

#include <chrono>
#include <ctime>
#include <string>
#include <string_view>

#include "biaslens/augment.hpp"
#include "biaslens/cluster.hpp"
#include "biaslens/metrics_db.hpp"
#include "biaslens/metrics_model.hpp"
#include "json.hpp"

#ifndef BIASLENS_VERSION
#define BIASLENS_VERSION "0.0.0"
#endif

namespace biaslens::report {

using nlohmann::json;

inline constexpr std::string_view kSchemaDbIndex = "biaslens.db_index/1";
inline constexpr std::string_view kSchemaAugment = "biaslens.augment/1";
inline constexpr std::string_view kSchemaStereotype = "biaslens.stereotype/1";
inline constexpr std::string_view kSchemaMbIndex = "biaslens.mb_index/1";

inline json to_json(const ClusteringResult& r) {
  json centroids = json::array();
  for (const auto& c : r.centroids) {
    centroids.push_back(std::vector<double>(c.values().begin(), c.values().end()));
  }
  return {{"k", r.k},
          {"assignments", r.assignments},
          {"centroids", std::move(centroids)},
          {"inertia", r.inertia},
          {"iterations", r.iterations},
          {"seed", r.seed}};
}

inline json to_json(const GridSearchReport& g) {
  json cands = json::array();
  for (const auto& c : g.candidates) {
    cands.push_back({{"k", c.k}, {"silhouette", c.silhouette}, {"inertia", c.inertia}});
  }
  return {{"objective", "silhouette"}, {"candidates", std::move(cands)}, {"chosen_k", g.chosen_k}};
}

inline json to_json(const DbReport& r) {
  json rows = json::array();
  for (const auto& c : r.per_cluster) {
    rows.push_back({{"cluster", c.cluster},
                    {"size", c.size},
                    {"d_cos_theta", c.d_cos_theta},
                    {"db_c", c.db_c}});
  }
  return {{"target", r.target_name},
          {"comparison", r.comparison_name},
          {"target_size", r.target_size},
          {"db", r.db},
          {"threshold", r.threshold},
          {"biased", r.biased},
          {"chosen_k", r.chosen_k},
          {"k_range", {r.k_min, r.k_max}},
          {"initial_run", {{"k", r.initial_k}, {"inertia", r.initial_inertia}}},
          {"per_cluster", std::move(rows)},
          {"comparison_ids", r.comparison_ids},
          {"grid", to_json(r.grid)},
          {"clustering", to_json(r.clustering)},
          {"seed", r.seed},
          {"note", r.note}};
}

inline json to_json(const AugmentationRecord& r) {
  json j = {{"output_id", r.output_entry_id},
            {"source_id", r.source_entry_id},
            {"origin", to_string(r.origin)}};
  j["producer"] = r.producer_name ? json(*r.producer_name) : json(nullptr);
  j["biaser"] = r.biaser_used ? json(*r.biaser_used) : json(nullptr);
  return j;
}

inline json augment_summary(const AugmentResult& r, const Corpus& input) {
  return {{"input", input.name},
          {"input_size", input.size()},
          {"input_hash", corpus_hash(input).hex},
          {"output_size", r.corpus.size()},
          {"output_hash", corpus_hash(r.corpus).hex},
          {"counts",
           {{"original", r.count(Origin::kOriginal)},
            {"substitution", r.count(Origin::kSubstitution)},
            {"upshift", r.count(Origin::kUpshift)},
            {"downshift", r.count(Origin::kDownshift)}}}};
}

inline json to_json(const CatCounts& c) {
  return {{"stereotypical", c.stereotypical},
          {"anti_stereotypical", c.anti_stereotypical},
          {"nonsensical", c.nonsensical}};
}

inline json to_json(const CatEvaluation& ev) {
  json items = json::array();
  for (const auto& o : ev.outcomes) {
    items.push_back({{"id", o.item_id},
                     {"continuation", o.continuation},
                     {"similarities",
                      {{"stereotype", o.similarities.stereotype},
                       {"anti_stereotype", o.similarities.anti},
                       {"unrelated", o.similarities.unrelated}}},
                     {"label", to_string(o.label)}});
  }
  return {{"counts", to_json(ev.counts)},
          {"items_evaluated", ev.counts.total()},
          {"score_mode", to_string(ev.mode)},
          {"stereotype_score", ev.score ? json(*ev.score) : json(nullptr)},
          {"items", std::move(items)}};
}

inline json to_json(const ModelBiasReport& m) {
  json j = {{"perplexity", m.perplexity},
            {"token_count", m.token_count},
            {"stereotype_score", m.stereotype_score},
            {"dataset_size", m.dataset_size},
            {"mb_index", m.mb_index}};
  j["score_mode"] = m.score_mode ? json(to_string(*m.score_mode)) : json(nullptr);
  j["counts"] = m.counts ? to_json(*m.counts) : json(nullptr);
  if (m.reference) {
    j["reference"] = {{"name", m.reference->name},
                      {"content_hash", m.reference->content_hash},
                      {"entries", m.reference->entries}};
  } else {
    j["reference"] = nullptr;
  }
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json envelope(std::string_view schema, json effective_config, json payload) {
  return {{"schema", schema},
          {"tool_version", BIASLENS_VERSION},
          {"created_at", utc_timestamp()},
          {"effective_config", std::move(effective_config)},
          {"payload", std::move(payload)}};
}

}  // namespace biaslens::report
