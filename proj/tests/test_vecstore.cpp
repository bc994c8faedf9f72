#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ontox/vecstore.hpp"
#include "support/oracles.hpp"

using namespace ontox;

namespace {

EmbeddingSet parse(const std::string& text) {
  std::istringstream in(text);
  return read_embeddings(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadEmbeddings, ReadsRecordsInFileOrder) {
  auto set = parse(
      R"({"id": "b", "label": "dog", "modality": "text", "vector": [1, 2, 3]})"
      "\n"
      R"({"id": "a", "label": "cat", "modality": "image", "vector": [0.5, -1, 2e-3]})"
      "\n");
  ASSERT_EQ(set.dim(), 3u);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set[0].id, "b");
  EXPECT_EQ(set[1].label, "cat");
  EXPECT_EQ(set[1].modality, Modality::image);
  EXPECT_EQ(set[1].vector, (Vector{0.5, -1.0, 0.002}));
}

TEST(LoadEmbeddings, DimensionMismatchNamesLine) {
  auto msg = error_of(
      R"({"id": "a", "label": "a", "modality": "text", "vector": [1, 2, 3]})"
      "\n"
      R"({"id": "b", "label": "b", "modality": "text", "vector": [1, 2, 3, 4]})"
      "\n");
  EXPECT_NE(msg.find("dimension mismatch at line 2"), std::string::npos) << msg;
}

TEST(LoadEmbeddings, EmptyFile) {
  EXPECT_NE(error_of("").find("empty embedding set"), std::string::npos);
  EXPECT_NE(error_of("\n  \n").find("empty embedding set"), std::string::npos);
}

TEST(LoadEmbeddings, Rejections) {
  EXPECT_NE(error_of("not json\n").find("malformed line at line 1"), std::string::npos);
  EXPECT_NE(error_of("# comment\n").find("malformed line"), std::string::npos);
  EXPECT_NE(error_of(R"({"id": "a", "label": "a", "modality": "text"})").find("malformed line"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"id": "a", "label": "a", "modality": "audio", "vector": [1]})").find("modality"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"id": "a", "label": "a", "modality": "text", "vector": [1, "x"]})").find("non-numeric"),
            std::string::npos);
  auto dup = error_of(
      R"({"id": "a", "label": "a", "modality": "text", "vector": [1]})"
      "\n"
      R"({"id": "a", "label": "b", "modality": "text", "vector": [2]})");
  EXPECT_NE(dup.find("duplicate id 'a' at line 2"), std::string::npos) << dup;
  // JSON has no literal for non-finite numbers; overflow is the way one sneaks in.
  EXPECT_NE(error_of(R"({"id": "a", "label": "a", "modality": "text", "vector": [1e999]})").find("non-finite"),
            std::string::npos);
}

TEST(LoadEmbeddings, WriteReadRoundTripIsExact) {
  std::mt19937_64 rng(7);
  std::vector<Vector> vs;
  for (int i = 0; i < 5; ++i) vs.push_back(oracle::random_vector(rng, 6, 1e3));
  auto set = oracle::make_set(vs);
  std::stringstream buf;
  write_embeddings(buf, set);
  auto back = read_embeddings(buf);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(back[i].vector, set[i].vector);
}

TEST(LoadEmbeddings, MissingFile) {
  EXPECT_THROW(load_embeddings("/nonexistent/x.jsonl"), InputError);
}

TEST(Distance, WorkedExamples) {
  EXPECT_DOUBLE_EQ(distance(Vector{1, 0}, Vector{0, 1}, Metric::cosine), 1.0);
  EXPECT_DOUBLE_EQ(distance(Vector{1, 2}, Vector{4, 6}, Metric::manhattan), 7.0);
  EXPECT_DOUBLE_EQ(distance(Vector{3, 0}, Vector{0, 4}, Metric::euclidean), 5.0);
  EXPECT_DOUBLE_EQ(distance(Vector{1, 1}, Vector{-2, -2}, Metric::cosine), 2.0);
}

TEST(Distance, Errors) {
  EXPECT_THROW(distance(Vector{1, 2}, Vector{1, 2, 3}, Metric::euclidean), InputError);
  EXPECT_THROW(distance(Vector{0, 0}, Vector{1, 2}, Metric::cosine), InputError);
  EXPECT_NO_THROW(distance(Vector{0, 0}, Vector{1, 2}, Metric::manhattan));
}

TEST(Distance, SelfDistanceIsZero) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto a = oracle::random_vector(rng, 8);
    EXPECT_EQ(distance(a, a, Metric::manhattan), 0.0);
    EXPECT_EQ(distance(a, a, Metric::euclidean), 0.0);
    EXPECT_NEAR(distance(a, a, Metric::cosine), 0.0, 1e-12);
  }
}

TEST(MeanVector, WorkedExamples) {
  EXPECT_EQ(mean_vector({Vector{0, 0}, Vector{2, 2}}), (Vector{1, 1}));
  EXPECT_EQ(mean_vector({Vector{5, 5}}), (Vector{5, 5}));
  auto m = mean_vector({Vector{1, 0}, Vector{0, 1}, Vector{1, 1}});
  EXPECT_NEAR(m[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m[1], 2.0 / 3.0, 1e-15);
  EXPECT_THROW(mean_vector(std::vector<Vector>{}), InputError);
  EXPECT_THROW(mean_vector({Vector{1}, Vector{1, 2}}), InputError);
}

TEST(MeanVector, PermutationInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vector> vs;
    for (int i = 0; i < 7; ++i) vs.push_back(oracle::random_vector(rng, 4));
    auto m1 = mean_vector(vs);
    std::shuffle(vs.begin(), vs.end(), rng);
    auto m2 = mean_vector(vs);
    for (std::size_t k = 0; k < m1.size(); ++k) EXPECT_NEAR(m1[k], m2[k], 1e-12);
  }
}

TEST(PoolByLabel, MeansSharedLabelsInFirstAppearanceOrder) {
  auto set = EmbeddingSet::from_records({
      {"i1", "cat", Modality::image, {0, 2}},
      {"i2", "dog", Modality::image, {4, 4}},
      {"i3", "cat", Modality::image, {2, 0}},
  });
  auto pooled = pool_by_label(set);
  ASSERT_EQ(pooled.size(), 2u);
  EXPECT_EQ(pooled[0].label, "cat");
  EXPECT_EQ(pooled[0].vector, (Vector{1, 1}));
  EXPECT_EQ(pooled[1].label, "dog");
}
