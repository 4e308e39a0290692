#include <gtest/gtest.h>

#include <random>

#include "svrlab/core_math.hpp"
#include "svrlab/gradcheck.hpp"
#include "test_util.hpp"

namespace svrlab {
namespace {

TEST(CoreMath, NormalizeGivesUnitRows) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const Vec x = testing::random_vec(9, rng, 3.0);
    EXPECT_NEAR(norm(l2_normalize(x)), 1.0, 1e-12);
  }
  EXPECT_THROW(l2_normalize(Vec(4, 0.0)), Error);
}

TEST(CoreMath, NormalizeBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    Vec x = testing::random_vec(6, rng);
    const Vec w = testing::random_vec(6, rng);
    auto f = [&] { return dot(w, l2_normalize(x)); };
    const Vec analytic = l2_normalize_backward(x, w);
    EXPECT_LT(relative_error(analytic, numeric_gradient(f, x)), 1e-8);
  }
}

TEST(CoreMath, ProjectionsSplitAVector) {
  std::mt19937_64 rng(3);
  const Vec u = testing::random_unit(5, rng);
  const Vec v = testing::random_vec(5, rng);
  const Vec par = project_parallel(v, u);
  const Vec perp = project_perp(v, u);
  EXPECT_LE(testing::max_abs_diff(add(par, perp), v), 1e-14);
  EXPECT_NEAR(dot(perp, u), 0.0, 1e-14);
}

TEST(CoreMath, PullUnitVector) {
  const Vec t{1.0, 0.0}, a{0.0, 1.0};
  const Vec u = pull_unit_vector(t, a);
  EXPECT_NEAR(u[0], -std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(u[1], std::sqrt(0.5), 1e-15);
  try {
    pull_unit_vector(t, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegeneratePair);
  }
}

TEST(CoreMath, CosineIsClampedAndScaleFree) {
  const Vec a{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(cosine(a, scaled(a, 5.0)), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, scaled(a, -2.0)), -1.0);
  EXPECT_NEAR(scaled_similarity(Vec{1.0, 0.0}, Vec{0.6, 0.8}, 0.5), 1.2, 1e-15);
}

TEST(CoreMath, EmbeddingBatchRows) {
  std::mt19937_64 rng(4);
  const EmbeddingBatch b = testing::random_unit_batch(4, 3, rng);
  EXPECT_NO_THROW(b.check_unit_rows());
  const EmbeddingBatch w = b.without_row(1);
  ASSERT_EQ(w.rows(), 3u);
  EXPECT_EQ(Vec(w.row(0).begin(), w.row(0).end()), Vec(b.row(0).begin(), b.row(0).end()));
  EXPECT_EQ(Vec(w.row(1).begin(), w.row(1).end()), Vec(b.row(2).begin(), b.row(2).end()));
  EmbeddingBatch bad = b;
  bad.row(2)[0] += 0.1;
  EXPECT_THROW(bad.check_unit_rows(), Error);
  EXPECT_THROW(EmbeddingBatch::from_rows({Vec{1.0, 0.0}, Vec{1.0}}, false), Error);
}

}  // namespace
}  // namespace svrlab
