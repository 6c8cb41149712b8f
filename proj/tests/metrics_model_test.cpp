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

#include "biaslens/metrics_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

namespace biaslens {
namespace {

TEST(TruncateContinuationTest, CountsUnicodeScalars) {
  const std::string fifty(50, 'x');
  EXPECT_EQ(truncate_continuation(fifty), std::string(30, 'x'));
  EXPECT_EQ(truncate_continuation("ten chars!"), "ten chars!");
  std::string wide;
  for (int i = 0; i < 30; ++i) wide += "é";
  EXPECT_EQ(truncate_continuation(wide), wide);
  EXPECT_EQ(truncate_continuation(wide + "é"), wide);
  EXPECT_EQ(truncate_continuation(""), "");
}

TEST(LabelTest, ArgmaxAndTieRule) {
  EXPECT_EQ(label_for({0.9, 0.2, 0.1}), CatLabel::kStereotypical);
  EXPECT_EQ(label_for({0.4, 0.4, 0.1}), CatLabel::kAntiStereotypical);
  EXPECT_EQ(label_for({0.4, 0.1, 0.4}), CatLabel::kNonsensical);
  EXPECT_EQ(label_for({0.3, 0.3, 0.3}), CatLabel::kNonsensical);
}

TEST(ClassifyContinuationTest, SelfSimilarityIsMaximal) {
  const EmbeddingVector a({1, 0, 0}), b({0, 1, 0}), c({0.2, 0.3, 0.9});
  EXPECT_EQ(classify_continuation(c, a, b, c).label, CatLabel::kNonsensical);
  EXPECT_EQ(classify_continuation(a, a, b, c).label, CatLabel::kStereotypical);
  EXPECT_THROW(classify_continuation(EmbeddingVector({0, 0, 0}), a, b, c), Error);
}

TEST(ClassifyContinuationTest, ScaleInvariant) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> lam(0.01, 100);
  auto rv = [&] { return std::vector<double>{g(gen), g(gen), g(gen), g(gen)}; };
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<double>> v = {rv(), rv(), rv(), rv()};
    const auto base =
        classify_continuation(EmbeddingVector(v[0]), EmbeddingVector(v[1]), EmbeddingVector(v[2]),
                              EmbeddingVector(v[3]))
            .label;
    const std::size_t which = gen() % 4;
    const double l = lam(gen);
    for (double& x : v[which]) x *= l;
    EXPECT_EQ(classify_continuation(EmbeddingVector(v[0]), EmbeddingVector(v[1]),
                                    EmbeddingVector(v[2]), EmbeddingVector(v[3]))
                  .label,
              base);
  }
}

TEST(StereotypeScoreTest, BothModes) {
  const CatCounts c{5, 5, 10};
  EXPECT_EQ(stereotype_score(c, ScoreMode::kProse), 0.5);
  EXPECT_NEAR(stereotype_score(c, ScoreMode::kLiteral), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(stereotype_score({0, 7, 3}, ScoreMode::kProse), 0.0);
  EXPECT_EQ(stereotype_score({0, 7, 3}, ScoreMode::kLiteral), 0.0);
  EXPECT_EQ(stereotype_score({3, 0, 0}), 1.0);
}

TEST(StereotypeScoreTest, ExactIdentitiesOverRandomCounts) {
  std::mt19937_64 gen(6);
  for (int t = 0; t < 500; ++t) {
    const CatCounts c{gen() % 50, 1 + gen() % 50, gen() % 50};
    EXPECT_EQ(stereotype_score(c, ScoreMode::kLiteral),
              static_cast<double>(c.stereotypical) /
                  static_cast<double>(c.anti_stereotypical + c.nonsensical));
    EXPECT_EQ(stereotype_score(c, ScoreMode::kProse),
              static_cast<double>(c.stereotypical) /
                  static_cast<double>(c.stereotypical + c.anti_stereotypical));
  }
}

TEST(StereotypeScoreTest, ZeroDenominatorIsDegenerate) {
  try {
    stereotype_score({0, 0, 4}, ScoreMode::kProse);
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::kDegenerate);
  }
  EXPECT_THROW(stereotype_score({4, 0, 0}, ScoreMode::kLiteral), Error);
  EXPECT_THROW(parse_score_mode("median"), Error);
}

TEST(PerplexityTest, Examples) {
  const std::vector<double> half(7, std::log(0.5));
  EXPECT_NEAR(perplexity(half), 2.0, 1e-15);
  const std::vector<double> sure(4, 0.0);
  EXPECT_EQ(perplexity(sure), 1.0);
  const std::vector<double> mixed = {std::log(0.25), std::log(0.25), 0.0};
  EXPECT_NEAR(perplexity(mixed), 2.519842099789746, 1e-12);
}

TEST(PerplexityTest, Errors) {
  EXPECT_THROW(perplexity(std::vector<double>{}), Error);
  EXPECT_THROW(perplexity(std::vector<double>{-0.1, 0.2}), Error);
  EXPECT_THROW(perplexity(std::vector<double>{-INFINITY}), Error);
  EXPECT_THROW(perplexity(std::vector<double>{NAN}), Error);
}

TEST(MbIndexTest, Examples) {
  EXPECT_NEAR(mb_index(6.4660, 0.55, 1641), 2.167e-3, 5e-7);
  EXPECT_NEAR(mb_index(4.9290, 0.45, 1641), 1.352e-3, 5e-7);
  EXPECT_EQ(mb_index(7.3, 0.0, 12), 0.0);
  EXPECT_THROW(mb_index(2.0, 0.5, 0), Error);
  EXPECT_THROW(mb_index(0.0, 0.5, 1), Error);
  EXPECT_THROW(mb_index(2.0, -0.1, 1), Error);
}

// Published perplexity, score, mb-index and fine-tuning set sizes.
TEST(MbIndexTest, ReproducesPublishedTableWithinTwoPercent) {
  struct Row {
    double p, s;
    std::size_t n;
    double published;
  };
  const Row rows[] = {{6.4660, 0.55, 1641, 2.16e-3},
                      {6.2920, 0.52, 4248, 7.65e-4},
                      {4.9290, 0.45, 1641, 1.36e-3},
                      {4.9290, 0.45, 4248, 5.24e-4}};
  for (const auto& r : rows) {
    const double mb = mb_index(r.p, r.s, r.n);
    EXPECT_LT(std::abs(mb - r.published) / r.published, 0.02) << r.p << " " << r.n;
  }
}

TEST(MbIndexTest, LinearAndMonotone) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.01, 50);
  for (int t = 0; t < 500; ++t) {
    const double p = 1 + u(gen), s = u(gen) / 50;
    const std::size_t n = 1 + gen() % 10000;
    EXPECT_EQ(mb_index(p, s, 2 * n), mb_index(p, s, n) / 2);
    EXPECT_GT(mb_index(p * 1.01, s, n), mb_index(p, s, n));
    EXPECT_GT(mb_index(p, s * 1.01, n), mb_index(p, s, n));
  }
}

class EvaluateCatTest : public ::testing::Test {
 protected:
  static EmbeddingProviderConfig config() {
    EmbeddingProviderConfig c;
    c.dim = 256;
    c.seed = 0;
    return c;
  }
  std::vector<CatItem> items_with(int option) {
    std::vector<CatItem> items;
    const char* words[][3] = {{"strong loud man", "gentle quiet man", "blue teapot orbit"},
                              {"lazy worker", "diligent worker", "purple spoon"},
                              {"brilliant engineer", "clumsy engineer", "singing lamp"}};
    for (int i = 0; i < 3; ++i) {
      CatItem it{"i" + std::to_string(i), "ctx", words[i][0], words[i][1], words[i][2], {}};
      it.continuation = words[i][option];
      items.push_back(it);
    }
    return items;
  }
  EmbeddingProviderConfig embed_ = config();
  EmbeddingCache cache_{embed_.fingerprint()};
};

TEST_F(EvaluateCatTest, AllStereotypicalScoresOne) {
  const auto ev = evaluate_cat(items_with(0), std::nullopt, embed_, cache_, ScoreMode::kProse);
  EXPECT_EQ(ev.counts, (CatCounts{3, 0, 0}));
  ASSERT_TRUE(ev.score.has_value());
  EXPECT_EQ(*ev.score, 1.0);
}

TEST_F(EvaluateCatTest, AllNonsensicalIsDegenerate) {
  const auto ev = evaluate_cat(items_with(2), std::nullopt, embed_, cache_, ScoreMode::kProse);
  EXPECT_EQ(ev.counts, (CatCounts{0, 0, 3}));
  EXPECT_FALSE(ev.score.has_value());
  EXPECT_THROW(stereotype_score(ev.counts, ScoreMode::kProse), Error);
}

// Counts from tests/oracles/misc_oracle.py (cosine + argmax on the same
// hashed embeddings): I_A = 2, I_B = 3, I_C = 1.
TEST_F(EvaluateCatTest, SixItemFixtureMatchesOracle) {
  const auto items = load_cat_items(testing::fixture("cat6.jsonl"));
  ASSERT_EQ(items.size(), 6u);
  const auto ev = evaluate_cat(items, std::nullopt, embed_, cache_, ScoreMode::kProse);
  EXPECT_EQ(ev.counts, (CatCounts{2, 3, 1}));
  EXPECT_EQ(ev.counts.total(), items.size());
  EXPECT_EQ(ev.outcomes[0].label, CatLabel::kStereotypical);
  EXPECT_EQ(ev.outcomes[2].label, CatLabel::kNonsensical);
  EXPECT_NEAR(*ev.score, 0.4, 1e-15);
}

TEST_F(EvaluateCatTest, MissingContinuationWithoutProviderNamesItem) {
  auto items = items_with(0);
  items[1].continuation.reset();
  try {
    evaluate_cat(items, std::nullopt, embed_, cache_, ScoreMode::kProse);
    FAIL();
  } catch (const Error& ex) {
    EXPECT_NE(std::string(ex.what()).find("'i1'"), std::string::npos);
  }
}

TEST_F(EvaluateCatTest, ContinuationsAreTruncatedBeforeEmbedding) {
  auto items = items_with(0);
  items[0].continuation = std::string(29, 'z') + " strong loud man";
  const auto ev = evaluate_cat(items, std::nullopt, embed_, cache_, ScoreMode::kProse);
  EXPECT_EQ(ev.outcomes[0].continuation.size(), 30u);
}

TEST(CatItemTest, LoadValidation) {
  testing::TempDir dir;
  testing::write_file(dir / "dup.jsonl",
                      "{\"context\":\"c\",\"stereotype\":\"a\",\"anti_stereotype\":\"a\","
                      "\"unrelated\":\"c\"}\n");
  EXPECT_THROW(load_cat_items(dir / "dup.jsonl"), Error);
  testing::write_file(dir / "missing.jsonl", "{\"context\":\"c\"}\n");
  try {
    load_cat_items(dir / "missing.jsonl");
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(ex.what()).find("missing.jsonl:1"), std::string::npos);
  }
}

}  // namespace
}  // namespace biaslens
