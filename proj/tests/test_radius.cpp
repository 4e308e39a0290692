#include <gtest/gtest.h>

#include <random>

#include "svrlab/radius.hpp"
#include "test_util.hpp"

namespace svrlab {
namespace {

TEST(Radius, SimilarityVectorLayout) {
  std::mt19937_64 rng(31);
  const EmbeddingBatch T = testing::random_unit_batch(4, 5, rng);
  const EmbeddingBatch A = testing::random_unit_batch(4, 5, rng);
  const SimilarityVector s = similarity_vector(T, A, 2, 0.07);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s.s_pos, dot(T.row(2), A.row(2)) / 0.07, 1e-12);
  EXPECT_NEAR(s.s_negs[0], dot(T.row(2), A.row(0)) / 0.07, 1e-12);
  EXPECT_NEAR(s.s_negs[1], dot(T.row(2), A.row(1)) / 0.07, 1e-12);
  EXPECT_NEAR(s.s_negs[2], dot(T.row(2), A.row(3)) / 0.07, 1e-12);
  EXPECT_EQ(s.flat().front(), s.s_pos);
}

TEST(Radius, StaticRadiusIsSharedAndAccumulates) {
  RadiusModel m = RadiusModel::make_static(Direction::A2T, 0.25);
  EXPECT_EQ(m.params()[0]->name, "radius.a2t");
  std::mt19937_64 rng(32);
  const EmbeddingBatch T = testing::random_unit_batch(3, 4, rng);
  const Vec r = m.radius_for_anchors(T, T, 0.07);
  EXPECT_EQ(r, Vec(3, 0.25));
  m.params()[0]->zero_grad();
  m.backward(Vec{0.5, -0.25, 1.0});
  EXPECT_DOUBLE_EQ(m.params()[0]->grad[0], 1.25);
  EXPECT_TRUE(m.backward(Vec{0.0, 0.0, 0.0}, true).empty());
}

TEST(Radius, PredictorShapesAndInit) {
  std::mt19937_64 rng(33);
  RadiusModel m = RadiusModel::make_dynamic(Direction::T2A, 8, 32, 16, rng);
  const auto params = m.params();
  ASSERT_EQ(params.size(), 6u);
  EXPECT_EQ(params[0]->name, "predictor.t2a.w0");
  EXPECT_EQ(params[0]->shape, (std::vector<std::size_t>{32, 8}));
  EXPECT_EQ(params[4]->shape, (std::vector<std::size_t>{1, 16}));
  EXPECT_DOUBLE_EQ(params[5]->value[0], kPredictorOutputBias);
  for (double w : params[0]->value) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(8.0));
}

TEST(Radius, DynamicRadiusPerAnchorAndCacheChecks) {
  std::mt19937_64 rng(34);
  RadiusModel m = RadiusModel::make_dynamic(Direction::T2A, 4, 5, 3, rng);
  const EmbeddingBatch T = testing::random_unit_batch(4, 6, rng);
  const EmbeddingBatch A = testing::random_unit_batch(4, 6, rng);
  const Vec r = m.radius_for_anchors(T, A, 0.07);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_NE(r[0], r[1]);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(r[i], m.predictor().predict(similarity_vector(T, A, i, 0.07)));
  EXPECT_THROW(m.backward(Vec{1.0}), Error);

  MlpPredictor p = MlpPredictor::seeded(Direction::A2T, 4, 5, 3, rng);
  SimilarityVector s{0.5, {0.1, 0.2, 0.3}};
  try {
    predictor_backward(p, s, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StaleCache);
  }
  predict_radius(p, s);
  EXPECT_NO_THROW(predictor_backward(p, s, 1.0));
  EXPECT_THROW(p.predict(SimilarityVector{0.5, {0.1}}), Error);
}

TEST(Radius, A2TPredictorReadsAudioAnchors) {
  std::mt19937_64 rng(35);
  RadiusModel m = RadiusModel::make_dynamic(Direction::A2T, 3, 4, 2, rng);
  const EmbeddingBatch T = testing::random_unit_batch(3, 4, rng);
  const EmbeddingBatch A = testing::random_unit_batch(3, 4, rng);
  m.radius_for_anchors(T, A, 0.1);
  EXPECT_EQ(m.last_similarities()[1], similarity_vector(A, T, 1, 0.1));
}

}  // namespace
}  // namespace svrlab
