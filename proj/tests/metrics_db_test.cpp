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

#include "biaslens/metrics_db.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "test_util.hpp"

namespace biaslens {
namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

TEST(SimilaritySumTest, Examples) {
  const auto e = vec({1, 0});
  std::vector<EmbeddingVector> same = {vec({1, 0}), vec({2, 0})};
  EXPECT_DOUBLE_EQ(similarity_sum(same, e), 2.0);
  std::vector<EmbeddingVector> ortho = {vec({0, 1}), vec({0, 3})};
  EXPECT_DOUBLE_EQ(similarity_sum(ortho, e), 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<EmbeddingVector> mixed = {vec({1, 0}), vec({0, 1}), vec({r, r})};
  EXPECT_NEAR(similarity_sum(mixed, e), 1.7071067811865475, 1e-15);
}

TEST(SimilaritySumTest, Errors) {
  EXPECT_THROW(similarity_sum(std::vector<EmbeddingVector>{}, vec({1, 0})), Error);
  std::vector<EmbeddingVector> zero = {vec({0, 0})};
  EXPECT_THROW(similarity_sum(zero, vec({1, 0})), Error);
  std::vector<EmbeddingVector> wrong = {vec({1, 0, 0})};
  EXPECT_THROW(similarity_sum(wrong, vec({1, 0})), Error);
}

TEST(ClusterDbTest, Examples) {
  EXPECT_EQ(cluster_db(2.0, 2), 1.0);
  EXPECT_EQ(cluster_db(0.0, 5), 0.0);
  EXPECT_NEAR(cluster_db(1.7071067811865475, 3), 0.5690355937288492, 1e-15);
  EXPECT_THROW(cluster_db(1.0, 0), Error);
}

TEST(AggregateDbTest, Examples) {
  const std::vector<double> a = {1.0, 0.5}, b = {0.37}, c = {0.2, 0.4, 0.9};
  EXPECT_EQ(aggregate_db(a), 0.75);
  EXPECT_EQ(aggregate_db(b), 0.37);
  EXPECT_NEAR(aggregate_db(c), 0.5, 1e-15);
  EXPECT_THROW(aggregate_db(std::vector<double>{}), Error);
}

TEST(ClassifyBiasedTest, StrictThreshold) {
  EXPECT_TRUE(classify_biased(0.56));
  EXPECT_FALSE(classify_biased(0.49));
  EXPECT_FALSE(classify_biased(0.50));
  EXPECT_TRUE(classify_biased(0.50, 0.4));
}

EmbeddingProviderConfig fallback(std::uint64_t seed = 42) {
  EmbeddingProviderConfig cfg;
  cfg.dim = 256;
  cfg.seed = seed;
  return cfg;
}

Corpus repeated(const std::string& name, const std::string& text, std::size_t n) {
  Corpus c{name, {}};
  for (std::size_t i = 0; i < n; ++i) c.entries.push_back({line_id(i + 1), text, {}});
  return c;
}

TEST(DbIndexTest, IdenticalToOffenderScoresOne) {
  const std::string text = "the offender sentence about them";
  const auto target = repeated("t", text, 7);
  const auto comparison = repeated("c", text, 2);
  const auto ecfg = fallback();
  EmbeddingCache cache(ecfg.fingerprint());
  const auto rep = db_index(target, comparison, ecfg, cache, DbConfig{});
  EXPECT_NEAR(rep.db, 1.0, 1e-12);
  EXPECT_TRUE(rep.biased);
}

TEST(DbIndexTest, OrthogonalToOffenderScoresZero) {
  std::vector<EmbeddingVector> target = {vec({1, 0, 0}), vec({0, 1, 0}), vec({2, 0, 0}),
                                         vec({0, 3, 0}), vec({1, 1, 0})};
  std::vector<EmbeddingVector> drawn = {vec({0, 0, 1})};
  const auto rep = db_index_from_vectors(target, drawn, DbConfig{});
  EXPECT_EQ(rep.db, 0.0);
  EXPECT_FALSE(rep.biased);
}

DbConfig fixture_config() {
  DbConfig cfg;
  cfg.seed = 42;
  cfg.k_min = 2;
  cfg.k_max = 3;
  cfg.comparison_samples = 3;
  return cfg;
}

// Frozen output of tests/oracles/db_index_oracle.py: exhaustive partitions,
// silhouette per k, and the straight-line sum / |c| / mean.
TEST(DbIndexTest, MatchesIndependentOracleOnTwelveEntryFixture) {
  const auto target = load_corpus(testing::fixture("db_target12.jsonl"));
  const auto comparison = load_corpus(testing::fixture("db_comparison3.jsonl"));
  const auto ecfg = fallback(42);
  EmbeddingCache cache(ecfg.fingerprint());
  const auto rep = db_index(target, comparison, ecfg, cache, fixture_config());

  ASSERT_EQ(rep.grid.candidates.size(), 2u);
  EXPECT_NEAR(rep.grid.candidates[0].silhouette, 0.1392680432573117, 1e-9);
  EXPECT_NEAR(rep.grid.candidates[1].silhouette, 0.16397692349069018, 1e-9);
  ASSERT_EQ(rep.chosen_k, 3u);
  EXPECT_NEAR(rep.db, 0.12729234131695563, 1e-9);

  // Clusters are labelled arbitrarily; match them by their first member.
  const std::vector<std::pair<std::size_t, double>> expected = {
      {0, -0.047096908200680666}, {4, 0.39510655811362233}, {8, 0.03386737403792527}};
  const auto members = rep.clustering.members();
  for (const auto& [first, db_c] : expected) {
    const std::size_t c = rep.clustering.assignments[first];
    ASSERT_EQ(members[c].size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(members[c][i], first + i);
    EXPECT_NEAR(rep.per_cluster[c].db_c, db_c, 1e-9);
  }
  EXPECT_FALSE(rep.biased);
  EXPECT_EQ(rep.comparison_ids.size(), 3u);
}

TEST(DbIndexTest, ReplayIsBitIdentical) {
  const auto target = load_corpus(testing::fixture("db_target12.jsonl"));
  const auto comparison = load_corpus(testing::fixture("db_comparison3.jsonl"));
  const auto ecfg = fallback(42);
  DbConfig cfg;
  cfg.seed = 7;
  EmbeddingCache c1(ecfg.fingerprint()), c2(ecfg.fingerprint());
  const auto a = db_index(target, comparison, ecfg, c1, cfg);
  const auto b = db_index(target, comparison, ecfg, c2, cfg);
  EXPECT_EQ(a.db, b.db);
  EXPECT_EQ(a.comparison_ids, b.comparison_ids);
  EXPECT_EQ(a.clustering.assignments, b.clustering.assignments);
  EXPECT_EQ(a.chosen_k, b.chosen_k);
  for (std::size_t i = 0; i < a.per_cluster.size(); ++i) {
    EXPECT_EQ(a.per_cluster[i].db_c, b.per_cluster[i].db_c);
  }
}

TEST(DbIndexTest, ReportInvariantsOverRandomVectors) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + gen() % 30;
    const std::size_t dim = 2 + gen() % 6;
    std::vector<EmbeddingVector> target, drawn;
    auto random_vec = [&] {
      std::vector<double> v(dim);
      for (auto& x : v) x = g(gen);
      return vec(v);
    };
    for (std::size_t i = 0; i < n; ++i) target.push_back(random_vec());
    const std::size_t draws = 1 + gen() % 3;
    for (std::size_t i = 0; i < draws; ++i) drawn.push_back(random_vec());
    DbConfig cfg;
    cfg.seed = gen();
    const auto rep = db_index_from_vectors(target, drawn, cfg);
    std::size_t total = 0;
    std::vector<double> dbs;
    for (const auto& row : rep.per_cluster) {
      total += row.size;
      EXPECT_GE(row.db_c, -1.0);
      EXPECT_LE(row.db_c, 1.0);
      dbs.push_back(row.db_c);
    }
    EXPECT_EQ(total, n);
    EXPECT_EQ(rep.per_cluster.size(), rep.chosen_k);
    EXPECT_NEAR(aggregate_db(dbs), rep.db, 1e-12);
    EXPECT_GE(rep.db, -1.0);
    EXPECT_LE(rep.db, 1.0);
    EXPECT_EQ(rep.biased, rep.db > rep.threshold);
    if (n < 2) {
      EXPECT_EQ(rep.chosen_k, 1u);
    }
  }
}

TEST(DbIndexTest, DuplicatingAClusterLeavesItsDbUnchanged) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EmbeddingVector> cluster;
    for (int i = 0; i < 1 + static_cast<int>(gen() % 8); ++i) {
      cluster.push_back(vec({g(gen), g(gen), g(gen)}));
    }
    const auto e = vec({g(gen), g(gen), g(gen)});
    auto doubled = cluster;
    doubled.insert(doubled.end(), cluster.begin(), cluster.end());
    EXPECT_NEAR(cluster_db(similarity_sum(cluster, e), cluster.size()),
                cluster_db(similarity_sum(doubled, e), doubled.size()), 1e-12);
  }
}

TEST(DbIndexTest, MoreSamplesThanComparisonEntriesIsAnError) {
  const auto target = repeated("t", "some words here", 4);
  const auto comparison = repeated("c", "other words there", 2);
  const auto ecfg = fallback();
  EmbeddingCache cache(ecfg.fingerprint());
  DbConfig cfg;
  cfg.comparison_samples = 3;
  try {
    db_index(target, comparison, ecfg, cache, cfg);
    FAIL() << "expected an error";
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(ex.what()).find("comparison_samples"), std::string::npos);
  }
}

TEST(DbIndexTest, EmptyCorporaAreRejected) {
  const auto ecfg = fallback();
  EmbeddingCache cache(ecfg.fingerprint());
  const Corpus empty{"e", {}};
  const auto some = repeated("s", "words", 3);
  EXPECT_THROW(db_index(empty, some, ecfg, cache, DbConfig{}), Error);
  EXPECT_THROW(db_index(some, empty, ecfg, cache, DbConfig{}), Error);
}

TEST(DbIndexTest, DefaultKRange) {
  EXPECT_EQ(default_k_max(12), 2u);
  EXPECT_EQ(default_k_max(100), 16u);
  EXPECT_EQ(default_k_max(7), 1u);
  std::vector<EmbeddingVector> target = {vec({1, 0}), vec({0, 1}), vec({1, 1})};
  std::vector<EmbeddingVector> drawn = {vec({1, 0})};
  const auto rep = db_index_from_vectors(target, drawn, DbConfig{});
  EXPECT_EQ(rep.k_min, 2u);
  EXPECT_EQ(rep.k_max, 2u);
  EXPECT_EQ(rep.initial_k, 3u);
}

TEST(DrawComparisonTest, DistinctAndSeeded) {
  DbConfig cfg;
  cfg.comparison_samples = 5;
  const auto a = draw_comparison(20, cfg);
  EXPECT_EQ(a, draw_comparison(20, cfg));
  std::set<std::size_t> uniq(a.begin(), a.end());
  EXPECT_EQ(uniq.size(), 5u);
  for (auto i : a) EXPECT_LT(i, 20u);
}

}  // namespace
}  // namespace biaslens
