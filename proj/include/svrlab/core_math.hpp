#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "svrlab/error.hpp"

namespace svrlab {

using Vec = std::vector<double>;
using VecView = std::span<const double>;
using VecSpan = std::span<double>;

inline constexpr double kUnitNormTol = 1e-9;
inline constexpr double kZeroNormFloor = 1e-30;
inline constexpr double kDegeneratePairFloor = 1e-12;

// Row-major block of equal-width embedding vectors for one modality.
class EmbeddingBatch {
 public:
  EmbeddingBatch() = default;
  EmbeddingBatch(std::size_t rows, std::size_t dim, bool normalized = false);
  EmbeddingBatch(std::size_t rows, std::size_t dim, Vec data, bool normalized);

  static EmbeddingBatch from_rows(const std::vector<Vec>& rows, bool normalized);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }
  bool normalized() const noexcept { return normalized_; }
  void set_normalized(bool flag) noexcept { normalized_ = flag; }

  VecView row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  VecSpan row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  const Vec& data() const noexcept { return data_; }
  Vec& data() noexcept { return data_; }

  // Copy of every row except `skip`, preserving row order.
  EmbeddingBatch without_row(std::size_t skip) const;

  // Throws ShapeMismatch when a normalized batch carries a non-unit row.
  void check_unit_rows(double tol = kUnitNormTol) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  Vec data_;
  bool normalized_ = false;
};

double norm(VecView x);
double dot(VecView a, VecView b);
Vec add(VecView a, VecView b);
Vec sub(VecView a, VecView b);
Vec scaled(VecView x, double alpha);
void axpy(double alpha, VecView x, VecSpan y);

Vec l2_normalize(VecView x);

// Gradient of the loss w.r.t. x given the gradient w.r.t. y = x / ||x||.
Vec l2_normalize_backward(VecView x, VecView upstream_grad);

// a.t / tau for unit-norm inputs.
double scaled_similarity(VecView t, VecView a, double tau);

// (a_pos - t_pos) / ||a_pos - t_pos||; DegeneratePair when the two coincide.
Vec pull_unit_vector(VecView t_pos, VecView a_pos);

// v - (v.u) u
Vec project_perp(VecView v, VecView u_hat);

// (v.u) u
Vec project_parallel(VecView v, VecView u_hat);

double cosine(VecView a, VecView b);

}  // namespace svrlab
