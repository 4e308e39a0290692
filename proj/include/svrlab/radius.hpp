#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "svrlab/core_math.hpp"
#include "svrlab/mlp.hpp"
#include "svrlab/optim.hpp"

namespace svrlab {

enum class Direction { T2A, A2T };
enum class RadiusMode { Static, Dynamic };

std::string_view direction_name(Direction d) noexcept;

// [s(anchor, pos), s(anchor, neg_1), ...] with negatives in batch-row order.
struct SimilarityVector {
  double s_pos = 0.0;
  Vec s_negs;

  std::size_t size() const noexcept { return 1 + s_negs.size(); }
  Vec flat() const;
  bool operator==(const SimilarityVector&) const = default;
};

// Similarity vector of anchor row i against every gallery row (positive at i).
SimilarityVector similarity_vector(const EmbeddingBatch& anchors, const EmbeddingBatch& gallery, std::size_t i,
                                   double tau);

inline constexpr double kStaticRadiusInit = 0.1;
inline constexpr double kPredictorOutputBias = 0.1;

struct StaticRadius {
  Param value;
  Direction direction = Direction::T2A;

  explicit StaticRadius(Direction dir, double init = kStaticRadiusInit);
  double get() const { return value.value[0]; }
};

// B -> h1 -> h2 -> 1 radius predictor over one anchor's similarity vector.
class MlpPredictor {
 public:
  MlpPredictor() = default;
  MlpPredictor(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2);

  static MlpPredictor seeded(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2,
                             std::mt19937_64& rng, double output_bias = kPredictorOutputBias);

  Direction direction() const noexcept { return direction_; }
  std::size_t input_width() const { return net_.input_width(); }
  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

  // Forward pass whose cache is kept for a later predictor_backward.
  double predict_cached(const SimilarityVector& s);
  // Pure forward pass; safe to call concurrently.
  double predict(const SimilarityVector& s) const;

  // Cache entry for s, or nullptr.
  const Mlp::Cache* find_cache(const SimilarityVector& s) const;
  void clear_cache() noexcept { cached_.clear(); }

 private:
  Direction direction_ = Direction::T2A;
  Mlp net_;
  std::vector<std::pair<SimilarityVector, Mlp::Cache>> cached_;
};

double predict_radius(MlpPredictor& predictor, const SimilarityVector& s);

// Parameter gradients scaled by upstream_dR; the similarity inputs receive none.
void predictor_backward(MlpPredictor& predictor, const SimilarityVector& s, double upstream_dR);

// Radius source for one direction: a shared scalar or a predictor.
class RadiusModel {
 public:
  static RadiusModel make_static(Direction dir, double init = kStaticRadiusInit);
  static RadiusModel make_dynamic(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2,
                                  std::mt19937_64& rng);

  RadiusMode mode() const noexcept { return mode_; }
  Direction direction() const noexcept { return direction_; }

  // One radius per anchor of the batch. Dynamic mode caches forward passes.
  Vec radius_for_anchors(const EmbeddingBatch& texts, const EmbeddingBatch& audios, double tau);
  // Same, evaluated on caller-supplied similarity vectors.
  Vec radius_for_similarities(const std::vector<SimilarityVector>& s);

  const std::vector<SimilarityVector>& last_similarities() const noexcept { return last_s_; }

  // Routes dL/dR_i into the scalar or predictor parameters. Returns dL/dS_i
  // per anchor (empty unless `want_input_grad` and dynamic mode).
  std::vector<Vec> backward(std::span<const double> grad_radii, bool want_input_grad = false);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  double static_value() const { return static_->get(); }
  MlpPredictor& predictor() { return *predictor_; }
  const MlpPredictor& predictor() const { return *predictor_; }

 private:
  RadiusMode mode_ = RadiusMode::Static;
  Direction direction_ = Direction::T2A;
  std::optional<StaticRadius> static_;
  std::optional<MlpPredictor> predictor_;
  std::vector<SimilarityVector> last_s_;
  std::size_t last_count_ = 0;
};

}  // namespace svrlab
