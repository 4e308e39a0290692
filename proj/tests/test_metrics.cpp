#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "svrlab/metrics.hpp"

namespace svrlab {
namespace {

SimilarityMatrix make_matrix(std::size_t q, std::size_t g, Vec values) {
  SimilarityMatrix s;
  s.queries = q;
  s.gallery = g;
  s.values = std::move(values);
  return s;
}

// Full stable sort by (score desc, index asc).
std::vector<std::size_t> full_order(const SimilarityMatrix& s, std::size_t q) {
  std::vector<std::size_t> order(s.gallery);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.at(q, a) > s.at(q, b); });
  return order;
}

double oracle_recall(const SimilarityMatrix& s, const std::vector<std::size_t>& gt, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q < s.queries; ++q) {
    const auto order = full_order(s, q);
    if (std::find(order.begin(), order.begin() + k, gt[q]) != order.begin() + k) ++hits;
  }
  return static_cast<double>(hits) / s.queries;
}

double oracle_map10(const SimilarityMatrix& s, const std::vector<std::vector<std::size_t>>& rel) {
  double total = 0.0;
  for (std::size_t q = 0; q < s.queries; ++q) {
    const auto order = full_order(s, q);
    double ap = 0.0;
    std::size_t found = 0;
    for (std::size_t r = 0; r < std::min<std::size_t>(10, order.size()); ++r) {
      if (std::count(rel[q].begin(), rel[q].end(), order[r])) ap += static_cast<double>(++found) / (r + 1);
    }
    total += ap / std::min<std::size_t>(rel[q].size(), 10);
  }
  return total / s.queries;
}

TEST(Metrics, IdentityMatrixRecallIsOne) {
  Vec v(16 * 16, 0.0);
  for (std::size_t i = 0; i < 16; ++i) v[i * 16 + i] = 1.0;
  const RetrievalScores s = retrieval_scores(make_matrix(16, 16, v));
  EXPECT_EQ(s.r1, 1.0);
  EXPECT_EQ(s.map10, 1.0);
}

TEST(Metrics, ReversedRankingRecall) {
  // Ground truth always scores lowest in a gallery of 10.
  const std::size_t n = 10;
  Vec v(n * n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t g = 0; g < n; ++g) v[q * n + g] = g == q ? -1.0 : static_cast<double>(g);
  }
  const SimilarityMatrix s = make_matrix(n, n, v);
  std::vector<std::size_t> gt(n);
  std::iota(gt.begin(), gt.end(), std::size_t{0});
  EXPECT_EQ(recall_at_k(s, gt, 1), 0.0);
  EXPECT_EQ(recall_at_k(s, gt, 9), 0.0);
  EXPECT_EQ(recall_at_k(s, gt, 10), 1.0);
}

TEST(Metrics, TiesRankLowerIndexFirst) {
  const SimilarityMatrix s = make_matrix(1, 3, Vec{0.5, 0.5, 0.5});
  EXPECT_EQ(rank_of(s, 0, 0), 0u);
  EXPECT_EQ(rank_of(s, 0, 2), 2u);
  const std::size_t gt1[] = {1};
  EXPECT_EQ(recall_at_k(s, gt1, 1), 0.0);
  EXPECT_EQ(recall_at_k(s, gt1, 2), 1.0);
}

TEST(Metrics, AveragePrecisionCases) {
  Vec v(20);
  for (std::size_t g = 0; g < 20; ++g) v[g] = 20.0 - g;  // gallery order = index order
  const SimilarityMatrix s = make_matrix(1, 20, v);
  EXPECT_EQ(map_at_10(s, {{0}}), 1.0);
  EXPECT_EQ(map_at_10(s, {{11}}), 0.0);
  EXPECT_EQ(map_at_10(s, {{0, 1, 2, 3, 4}}), 1.0);
  EXPECT_DOUBLE_EQ(map_at_10(s, {{1}}), 0.5);
  EXPECT_DOUBLE_EQ(map_at_10(s, {{0, 2}}), (1.0 + 2.0 / 3.0) / 2.0);
  try {
    map_at_10(s, {{}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyRelevance);
  }
}

TEST(Metrics, BadArgumentsThrow) {
  const SimilarityMatrix s = make_matrix(2, 2, Vec{1, 0, 0, 1});
  const std::size_t ok[] = {0, 1};
  const std::size_t bad[] = {0, 2};
  EXPECT_THROW(recall_at_k(s, ok, 0), Error);
  EXPECT_THROW(recall_at_k(s, ok, 3), Error);
  EXPECT_THROW(recall_at_k(s, bad, 1), Error);
  EXPECT_THROW(recall_at_k(s, std::span<const std::size_t>(ok, 1), 1), Error);
}

TEST(Metrics, MatchBruteForceOracleOnRandomMatrices) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::size_t> dim(1, 14);
  std::uniform_int_distribution<int> level(0, 5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t q = dim(rng), g = dim(rng);
    Vec v(q * g);
    // Coarse levels on half the trials to exercise ties.
    for (double& x : v) x = trial % 2 ? n(rng) : static_cast<double>(level(rng));
    const SimilarityMatrix s = make_matrix(q, g, v);
    std::uniform_int_distribution<std::size_t> pick(0, g - 1);
    std::vector<std::size_t> gt(q);
    std::vector<std::vector<std::size_t>> rel(q);
    for (std::size_t i = 0; i < q; ++i) {
      gt[i] = pick(rng);
      rel[i] = {gt[i]};
      for (std::size_t extra = pick(rng) % 4; extra > 0; --extra) {
        const std::size_t r = pick(rng);
        if (std::find(rel[i].begin(), rel[i].end(), r) == rel[i].end()) rel[i].push_back(r);
      }
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= g; ++k) {
      const double r = recall_at_k(s, gt, k);
      ASSERT_EQ(r, oracle_recall(s, gt, k));
      ASSERT_GE(r, prev);
      prev = r;
    }
    ASSERT_EQ(map_at_10(s, rel), oracle_map10(s, rel));
  }
}

TEST(Metrics, TransposeSwapsRoles) {
  const SimilarityMatrix s = make_matrix(2, 3, Vec{1, 2, 3, 4, 5, 6});
  const SimilarityMatrix t = s.transposed();
  EXPECT_EQ(t.queries, 3u);
  EXPECT_EQ(t.at(2, 1), 6.0);
  EXPECT_EQ(t.at(0, 1), 4.0);
}

}  // namespace
}  // namespace svrlab
