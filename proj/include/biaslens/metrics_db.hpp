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

// Dataset bias index: how close, on average, the entries of each semantic
// cluster of a target corpus sit to entries drawn from an offender corpus.
//
//   d_cos(c, e)  = sum over members e_d of c of cos(e_d, e)
//   db_c         = d_cos(c, e) / |c|          (mean over drawn e when > 1)
//   db           = mean of db_c over the k clusters (clusters weigh equally)
//   biased       = db > threshold

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biaslens/cluster.hpp"
#include "biaslens/corpus.hpp"
#include "biaslens/embed.hpp"
#include "biaslens/error.hpp"
#include "biaslens/random.hpp"

namespace biaslens {

inline constexpr std::string_view kComparabilityNote =
    "db-index values are only comparable when computed against the same comparison "
    "corpus, whose entries should match the target in syntactic structure and bias "
    "magnitude.";

// Seed streams of the pipeline.
inline constexpr std::uint64_t kStreamClustering = 1;
inline constexpr std::uint64_t kStreamSampling = 2;
inline constexpr std::uint64_t kStreamInitialRun = 3;

struct DbConfig {
  std::size_t k_min = 2;
  std::size_t k_max = 0;  // 0: min(16, floor(N / 5)), at least k_min, at most N
  std::size_t comparison_samples = 1;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  std::size_t initial_k = 4;  // exploratory run recorded before tuning
  KMeansOptions kmeans;
};

struct ClusterDb {
  std::size_t cluster = 0;
  std::size_t size = 0;
  double d_cos_theta = 0.0;  // similarity sum, averaged over drawn e_c
  double db_c = 0.0;
};

struct DbReport {
  std::string target_name;
  std::string comparison_name;
  std::size_t target_size = 0;
  std::size_t chosen_k = 0;
  std::vector<ClusterDb> per_cluster;
  double db = 0.0;
  double threshold = 0.5;
  bool biased = false;
  std::vector<std::string> comparison_ids;  // in draw order
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::size_t initial_k = 0;
  double initial_inertia = 0.0;
  GridSearchReport grid;
  ClusteringResult clustering;
  std::uint64_t seed = 0;
  std::string note{kComparabilityNote};
};

inline double similarity_sum(std::span<const EmbeddingVector> cluster_vectors,
                             const EmbeddingVector& comparison) {
  require(!cluster_vectors.empty(), ErrorKind::kInvalidArgument,
          "similarity_sum: empty cluster");
  double sum = 0.0;
  for (const auto& v : cluster_vectors) sum += cosine_similarity(v, comparison);
  return sum;
}

inline double cluster_db(double d_cos_theta, std::size_t cluster_size) {
  require(cluster_size >= 1, ErrorKind::kInvalidArgument, "cluster_db: empty cluster");
  return d_cos_theta / static_cast<double>(cluster_size);
}

inline double aggregate_db(std::span<const double> per_cluster_db) {
  require(!per_cluster_db.empty(), ErrorKind::kInvalidArgument,
          "aggregate_db: no clusters");
  double sum = 0.0;
  for (double v : per_cluster_db) sum += v;
  return sum / static_cast<double>(per_cluster_db.size());
}

inline bool classify_biased(double db, double threshold = 0.5) { return db > threshold; }

inline std::size_t default_k_max(std::size_t n) {
  return std::min<std::size_t>(16, n / 5);
}

// Clusters pre-embedded target vectors and scores them against pre-embedded
// comparison vectors. db_index() below wraps this with embedding and sampling.
inline DbReport db_index_from_vectors(std::span<const EmbeddingVector> target,
                                      std::span<const EmbeddingVector> comparison_drawn,
                                      const DbConfig& cfg) {
  require(!target.empty(), ErrorKind::kInvalidArgument, "db_index: target corpus is empty");
  require(!comparison_drawn.empty(), ErrorKind::kInvalidArgument,
          "db_index: no comparison entries drawn");
  DbReport rep;
  rep.seed = cfg.seed;
  rep.threshold = cfg.threshold;
  rep.target_size = target.size();
  const std::size_t n = target.size();

  rep.initial_k = std::min(cfg.initial_k, n);
  if (rep.initial_k >= 1) {
    rep.initial_inertia =
        kmeans(target, rep.initial_k, derive_seed(cfg.seed, kStreamInitialRun), cfg.kmeans)
            .inertia;
  }

  const std::uint64_t cluster_seed = derive_seed(cfg.seed, kStreamClustering);
  if (n < 2) {
    rep.k_min = rep.k_max = 1;
    rep.clustering = kmeans(target, 1, cluster_seed, cfg.kmeans);
    rep.grid.chosen_k = 1;
  } else {
    rep.k_min = cfg.k_min;
    rep.k_max = cfg.k_max != 0 ? cfg.k_max
                               : std::min(n, std::max(cfg.k_min, default_k_max(n)));
    GridSearchOutcome g = grid_search_k(target, rep.k_min, rep.k_max, cluster_seed, cfg.kmeans);
    rep.grid = std::move(g.report);
    rep.clustering = std::move(g.result);
  }
  rep.chosen_k = rep.clustering.k;

  const auto members = rep.clustering.members();
  std::vector<double> dbs;
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::vector<EmbeddingVector> vecs;
    vecs.reserve(members[c].size());
    for (std::size_t i : members[c]) vecs.push_back(target[i]);
    double sum_of_sums = 0.0, sum_of_db = 0.0;
    for (const auto& e_c : comparison_drawn) {
      const double s = similarity_sum(vecs, e_c);
      sum_of_sums += s;
      sum_of_db += cluster_db(s, vecs.size());
    }
    const double draws = static_cast<double>(comparison_drawn.size());
    ClusterDb row{c, vecs.size(), sum_of_sums / draws, sum_of_db / draws};
    dbs.push_back(row.db_c);
    rep.per_cluster.push_back(row);
  }
  rep.db = aggregate_db(dbs);
  rep.biased = classify_biased(rep.db, cfg.threshold);
  return rep;
}

// Draws cfg.comparison_samples entries from `comparison` without replacement
// using derive_seed(cfg.seed, kStreamSampling).
inline std::vector<std::size_t> draw_comparison(std::size_t comparison_size,
                                                const DbConfig& cfg) {
  require(cfg.comparison_samples >= 1, ErrorKind::kInvalidArgument,
          "db_index: comparison_samples must be positive");
  require(cfg.comparison_samples <= comparison_size, ErrorKind::kInvalidArgument,
          "db_index: comparison corpus has " + std::to_string(comparison_size) +
              " entries, fewer than comparison_samples=" +
              std::to_string(cfg.comparison_samples));
  Rng rng(derive_seed(cfg.seed, kStreamSampling));
  return rng.sample_without_replacement(comparison_size, cfg.comparison_samples);
}

inline DbReport db_index(const Corpus& target, const Corpus& comparison,
                         const EmbeddingProviderConfig& embed_config, EmbeddingCache& cache,
                         const DbConfig& cfg) {
  require(!target.empty(), ErrorKind::kInvalidArgument, "db_index: target corpus is empty");
  require(!comparison.empty(), ErrorKind::kInvalidArgument,
          "db_index: comparison corpus is empty");
  const auto drawn = draw_comparison(comparison.size(), cfg);

  const auto target_vecs = embed_batch(embed_config, cache, target.texts());
  std::vector<std::string> drawn_texts;
  for (std::size_t i : drawn) drawn_texts.push_back(comparison.entries[i].text);
  const auto drawn_vecs = embed_batch(embed_config, cache, drawn_texts);

  DbReport rep = db_index_from_vectors(target_vecs, drawn_vecs, cfg);
  rep.target_name = target.name;
  rep.comparison_name = comparison.name;
  for (std::size_t i : drawn) rep.comparison_ids.push_back(comparison.entries[i].id);
  return rep;
}

}  // namespace biaslens
