#include "svrlab/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "svrlab/kernels.hpp"
#include "svrlab/parallel.hpp"

namespace svrlab {

SimilarityMatrix SimilarityMatrix::transposed() const {
  SimilarityMatrix t;
  t.queries = gallery;
  t.gallery = queries;
  t.values.resize(values.size());
  for (std::size_t q = 0; q < queries; ++q) {
    for (std::size_t g = 0; g < gallery; ++g) t.values[g * queries + q] = at(q, g);
  }
  return t;
}

SimilarityMatrix similarity_matrix(const EmbeddingBatch& queries, const EmbeddingBatch& gallery,
                                   unsigned threads) {
  if (queries.dim() != gallery.dim()) throw Error(Errc::ShapeMismatch, "query and gallery widths differ");
  SimilarityMatrix s;
  s.queries = queries.rows();
  s.gallery = gallery.rows();
  s.values.resize(s.queries * s.gallery);
  parallel_for(s.queries, threads, [&](std::size_t q) {
    for (std::size_t g = 0; g < s.gallery; ++g) s.values[q * s.gallery + g] = kernels::dot(queries.row(q), gallery.row(g));
  });
  return s;
}

std::size_t rank_of(const SimilarityMatrix& sim, std::size_t q, std::size_t g) {
  const double target = sim.at(q, g);
  std::size_t rank = 0;
  for (std::size_t o = 0; o < sim.gallery; ++o) {
    const double v = sim.at(q, o);
    if (v > target || (v == target && o < g)) ++rank;
  }
  return rank;
}

double recall_at_k(const SimilarityMatrix& sim, std::span<const std::size_t> ground_truth, std::size_t k) {
  if (ground_truth.size() != sim.queries) throw Error(Errc::IndexOutOfRange, "need one ground truth per query");
  if (k < 1 || k > sim.gallery) throw Error(Errc::IndexOutOfRange, "k must be in [1, gallery size]");
  if (sim.queries == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < sim.queries; ++q) {
    if (ground_truth[q] >= sim.gallery) {
      throw Error(Errc::IndexOutOfRange, "ground truth " + std::to_string(ground_truth[q]) + " outside gallery");
    }
    if (rank_of(sim, q, ground_truth[q]) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sim.queries);
}

double map_at_10(const SimilarityMatrix& sim, const std::vector<std::vector<std::size_t>>& relevance) {
  if (relevance.size() != sim.queries) throw Error(Errc::IndexOutOfRange, "need one relevance set per query");
  if (sim.queries == 0) return 0.0;
  const std::size_t depth = std::min<std::size_t>(10, sim.gallery);
  std::vector<std::size_t> order(sim.gallery);
  double total = 0.0;
  for (std::size_t q = 0; q < sim.queries; ++q) {
    const auto& rel = relevance[q];
    if (rel.empty()) throw Error(Errc::EmptyRelevance, "query " + std::to_string(q) + " has no relevant items");
    for (std::size_t g : rel) {
      if (g >= sim.gallery) throw Error(Errc::IndexOutOfRange, "relevant item outside gallery");
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row = sim.row(q);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth), order.end(),
                      [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
    double ap = 0.0;
    std::size_t found = 0;
    for (std::size_t r = 0; r < depth; ++r) {
      if (std::find(rel.begin(), rel.end(), order[r]) != rel.end()) {
        ++found;
        ap += static_cast<double>(found) / static_cast<double>(r + 1);
      }
    }
    total += ap / static_cast<double>(std::min<std::size_t>(rel.size(), 10));
  }
  return total / static_cast<double>(sim.queries);
}

RetrievalScores retrieval_scores(const SimilarityMatrix& sim) {
  std::vector<std::size_t> gt(sim.queries);
  std::iota(gt.begin(), gt.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> rel(sim.queries);
  for (std::size_t q = 0; q < sim.queries; ++q) rel[q] = {q};
  RetrievalScores s;
  auto clip = [&](std::size_t k) { return std::min(k, sim.gallery); };
  s.r1 = recall_at_k(sim, gt, clip(1));
  s.r5 = recall_at_k(sim, gt, clip(5));
  s.r10 = recall_at_k(sim, gt, clip(10));
  s.map10 = map_at_10(sim, rel);
  return s;
}

}  // namespace svrlab
