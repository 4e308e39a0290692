#include "svrlab/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svrlab/kernels.hpp"

namespace svrlab {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::DegeneratePair: return "DegeneratePair";
    case Errc::ZeroUpdate: return "ZeroUpdate";
    case Errc::BatchTooSmall: return "BatchTooSmall";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::StaleCache: return "StaleCache";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyRelevance: return "EmptyRelevance";
    case Errc::Format: return "Format";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

EmbeddingBatch::EmbeddingBatch(std::size_t rows, std::size_t dim, bool normalized)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0), normalized_(normalized) {}

EmbeddingBatch::EmbeddingBatch(std::size_t rows, std::size_t dim, Vec data, bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (data_.size() != rows * dim) {
    throw Error(Errc::ShapeMismatch, "batch payload has " + std::to_string(data_.size()) +
                                         " values, expected " + std::to_string(rows * dim));
  }
}

EmbeddingBatch EmbeddingBatch::from_rows(const std::vector<Vec>& rows, bool normalized) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  Vec flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(Errc::ShapeMismatch, "ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return EmbeddingBatch(rows.size(), dim, std::move(flat), normalized);
}

EmbeddingBatch EmbeddingBatch::without_row(std::size_t skip) const {
  EmbeddingBatch out(rows_ - 1, dim_, normalized_);
  std::size_t o = 0;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i == skip) continue;
    auto src = row(i);
    std::copy(src.begin(), src.end(), out.row(o++).begin());
  }
  return out;
}

void EmbeddingBatch::check_unit_rows(double tol) const {
  if (!normalized_) return;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double n = norm(row(i));
    if (std::abs(n - 1.0) > tol) {
      throw Error(Errc::ShapeMismatch, "row " + std::to_string(i) + " has norm " + std::to_string(n));
    }
  }
}

double dot(VecView a, VecView b) { return kernels::dot(a, b); }

double norm(VecView x) { return std::sqrt(kernels::dot(x, x)); }

Vec add(VecView a, VecView b) {
  Vec out(a.begin(), a.end());
  kernels::axpy(1.0, b, out);
  return out;
}

Vec sub(VecView a, VecView b) {
  Vec out(a.begin(), a.end());
  kernels::axpy(-1.0, b, out);
  return out;
}

Vec scaled(VecView x, double alpha) {
  Vec out(x.begin(), x.end());
  kernels::scale(alpha, out);
  return out;
}

void axpy(double alpha, VecView x, VecSpan y) { kernels::axpy(alpha, x, y); }

Vec l2_normalize(VecView x) {
  const double n = norm(x);
  if (!(n >= kZeroNormFloor)) throw Error(Errc::ZeroNorm, "cannot normalize a zero vector");
  return scaled(x, 1.0 / n);
}

Vec l2_normalize_backward(VecView x, VecView upstream_grad) {
  const double n = norm(x);
  if (!(n >= kZeroNormFloor)) throw Error(Errc::ZeroNorm, "cannot normalize a zero vector");
  Vec y = scaled(x, 1.0 / n);
  const double proj = dot(y, upstream_grad);
  Vec out(upstream_grad.begin(), upstream_grad.end());
  kernels::axpy(-proj, y, out);
  kernels::scale(1.0 / n, out);
  return out;
}

double scaled_similarity(VecView t, VecView a, double tau) {
  SVRLAB_DCHECK(tau > 0.0, Errc::InvalidConfig, "tau must be positive");
  SVRLAB_DCHECK(std::abs(norm(t) - 1.0) <= kUnitNormTol && std::abs(norm(a) - 1.0) <= kUnitNormTol,
                Errc::ShapeMismatch, "scaled_similarity expects unit-norm inputs");
  return dot(a, t) / tau;
}

Vec pull_unit_vector(VecView t_pos, VecView a_pos) {
  Vec diff = sub(a_pos, t_pos);
  const double n = norm(diff);
  if (!(n >= kDegeneratePairFloor)) {
    throw Error(Errc::DegeneratePair, "anchor coincides with its positive");
  }
  kernels::scale(1.0 / n, diff);
  return diff;
}

Vec project_perp(VecView v, VecView u_hat) {
  Vec out(v.begin(), v.end());
  kernels::axpy(-dot(v, u_hat), u_hat, out);
  return out;
}

Vec project_parallel(VecView v, VecView u_hat) { return scaled(u_hat, dot(v, u_hat)); }

double cosine(VecView a, VecView b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na >= kZeroNormFloor) || !(nb >= kZeroNormFloor)) {
    throw Error(Errc::ZeroNorm, "cosine of a zero vector");
  }
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace svrlab
