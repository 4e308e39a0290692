#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "svrlab/core_math.hpp"

namespace svrlab {

// Query-by-gallery similarity scores, row-major.
struct SimilarityMatrix {
  std::size_t queries = 0;
  std::size_t gallery = 0;
  Vec values;

  double at(std::size_t q, std::size_t g) const { return values[q * gallery + g]; }
  VecView row(std::size_t q) const { return {values.data() + q * gallery, gallery}; }
  SimilarityMatrix transposed() const;
};

SimilarityMatrix similarity_matrix(const EmbeddingBatch& queries, const EmbeddingBatch& gallery,
                                   unsigned threads = 1);

// 0-based rank of gallery item g for query q. Items with a higher score rank
// first; equal scores rank by lower gallery index.
std::size_t rank_of(const SimilarityMatrix& sim, std::size_t q, std::size_t g);

double recall_at_k(const SimilarityMatrix& sim, std::span<const std::size_t> ground_truth, std::size_t k);

// Mean truncated average precision over the top 10, denominator min(#relevant, 10).
double map_at_10(const SimilarityMatrix& sim, const std::vector<std::vector<std::size_t>>& relevance);

struct RetrievalScores {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double map10 = 0.0;
};

// Diagonal ground truth (query i matches gallery i). k is clipped to the gallery size.
RetrievalScores retrieval_scores(const SimilarityMatrix& sim);

}  // namespace svrlab
