#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svrlab/forces.hpp"
#include "svrlab/losses.hpp"
#include "test_util.hpp"

namespace svrlab {
namespace {

TEST(Forces, DecompositionReassemblesTheGradient) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec t = testing::random_unit(8, rng);
    const Vec a = testing::random_unit(8, rng);
    const EmbeddingBatch negs = testing::random_unit_batch(7, 8, rng);
    const ForceDecomposition f = decompose_forces(t, a, negs, 0.07);
    EXPECT_LE(testing::max_abs_diff(f.gradient(), infonce_grad_anchor(t, a, negs, 0.07)), 1e-12);
    for (const auto& n : f.per_negative) {
      EXPECT_LE(testing::max_abs_diff(add(n.parallel, n.perp), n.push), 1e-12);
      EXPECT_LE(std::abs(dot(n.perp, f.u_hat)), 1e-10);
    }
  }
}

TEST(Forces, CollinearAndOrthogonalNegatives) {
  const Vec t{1.0, 0.0, 0.0};
  const Vec a{0.0, 1.0, 0.0};
  const Vec u = pull_unit_vector(t, a);
  const EmbeddingBatch along = EmbeddingBatch::from_rows({u}, true);
  const ForceDecomposition f1 = decompose_forces(t, a, along, 0.5);
  EXPECT_LE(norm(f1.per_negative[0].perp), 1e-15);
  const EmbeddingBatch ortho = EmbeddingBatch::from_rows({Vec{0.0, 0.0, 1.0}}, true);
  const ForceDecomposition f2 = decompose_forces(t, a, ortho, 0.5);
  EXPECT_LE(norm(f2.per_negative[0].parallel), 1e-15);
  EXPECT_THROW(decompose_forces(t, t, ortho, 0.5), Error);
}

TEST(Forces, HardNegativesPushHardest) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec t = testing::random_unit(6, rng);
    const Vec a = testing::random_unit(6, rng);
    const EmbeddingBatch negs = testing::random_unit_batch(5, 6, rng);
    const ForceDecomposition f = decompose_forces(t, a, negs, 0.07);
    std::size_t hardest = 0, strongest = 0;
    for (std::size_t j = 1; j < negs.rows(); ++j) {
      if (dot(t, negs.row(j)) > dot(t, negs.row(hardest))) hardest = j;
      if (norm(f.per_negative[j].push) > norm(f.per_negative[strongest].push)) strongest = j;
    }
    EXPECT_EQ(hardest, strongest);
  }
}

TEST(Forces, ScaledPushEndpoints) {
  std::mt19937_64 rng(23);
  const Vec t = testing::random_unit(6, rng);
  const Vec a = testing::random_unit(6, rng);
  const EmbeddingBatch negs = testing::random_unit_batch(4, 6, rng);
  const double tau = 0.07, alpha = 1.0;
  const double dist = norm(sub(a, t));
  const ForceDecomposition base = decompose_forces(t, a, negs, tau);

  const auto at_zero = svr_scaled_push(t, a, build_support_vector(t, a, 0.0), negs, tau, alpha);
  for (std::size_t j = 0; j < negs.rows(); ++j) {
    // t_sup = t, so both pushes use the same weights and the factor is 1.
    EXPECT_NEAR(at_zero[j].p_sup, at_zero[j].p_neg, 1e-15);
    EXPECT_LE(testing::max_abs_diff(at_zero[j].perp, scaled(base.per_negative[j].perp, 1.0 + alpha)), 1e-10);
  }
  const auto at_dist = svr_scaled_push(t, a, build_support_vector(t, a, dist), negs, tau, alpha);
  for (std::size_t j = 0; j < negs.rows(); ++j) {
    EXPECT_EQ(at_dist[j].perp_coefficient, at_dist[j].p_neg / tau);
    EXPECT_LE(testing::max_abs_diff(at_dist[j].perp, base.per_negative[j].perp), 1e-12);
  }
}

TEST(Forces, PerpCoefficientDecreasesInRadius) {
  const double dist = 0.9;
  double prev = perp_push_coefficient(0.2, 0.3, 0.07, 1.0, 0.0, dist);
  EXPECT_DOUBLE_EQ(prev, (0.2 + 0.3) / 0.07);
  for (int i = 1; i <= 100; ++i) {
    const double c = perp_push_coefficient(0.2, 0.3, 0.07, 1.0, dist * i / 100.0, dist);
    EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_DOUBLE_EQ(prev, 0.2 / 0.07);
}

TEST(Forces, DriftCosine) {
  const Vec t{1.0, 0.0}, a{0.0, 1.0};
  const Vec u = pull_unit_vector(t, a);
  EXPECT_NEAR(drift_cosine(u, t, a), 1.0, 1e-15);
  EXPECT_NEAR(drift_cosine(Vec{u[1], -u[0]}, t, a), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(drift_cosine(Vec{0.3, 0.1}, t, a), drift_cosine(Vec{3.0, 1.0}, t, a));
  try {
    drift_cosine(Vec{0.0, 0.0}, t, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroUpdate);
  }
}

TEST(Forces, ConvergedStateUpdateFollowsThePull) {
  // Anchor close to its positive, negatives nearly opposite: the applied
  // (tangential) update points along the chord to the positive.
  std::mt19937_64 rng(24);
  const std::size_t d = 8;
  const Vec a = testing::random_unit(d, rng);
  const Vec t = l2_normalize(add(a, scaled(testing::random_unit(d, rng), 0.05)));
  std::vector<Vec> rows;
  for (int j = 0; j < 5; ++j) rows.push_back(l2_normalize(add(scaled(a, -1.0), scaled(testing::random_unit(d, rng), 0.01))));
  const EmbeddingBatch negs = EmbeddingBatch::from_rows(rows, true);
  const Vec g = infonce_grad_anchor(t, a, negs, 0.07);
  const Vec update = scaled(l2_normalize_backward(t, g), -1.0);
  EXPECT_GT(drift_cosine(update, t, a), 0.99);
}

}  // namespace
}  // namespace svrlab
