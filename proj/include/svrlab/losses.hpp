#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "svrlab/core_math.hpp"

namespace svrlab {

// Softmax weights of one anchor against its positive and negatives.
struct SoftmaxWeights {
  double p_pos = 0.0;
  Vec p_neg;
};

struct LossBreakdown {
  double orig_t2a = 0.0;
  double orig_a2t = 0.0;
  double svr_t2a = 0.0;
  double svr_a2t = 0.0;
  double cons_t2a = 0.0;
  double cons_a2t = 0.0;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

// Auxiliary anchor t_sup = t + R * u_hat, u_hat pointing from the anchor to its positive.
struct SupportVector {
  Vec t_sup;
  double radius = 0.0;
  double anchor_to_pos_dist = 0.0;
  Vec u_hat;
};

// Denominator of the support-vector term. WithPositive is the usual softmax
// form; NegativesOnly sums exponentials over the negatives alone.
enum class Denominator { WithPositive, NegativesOnly };

struct SvrGradients {
  Vec grad_t;
  Vec grad_a_pos;
  EmbeddingBatch grad_negs;
  double grad_radius = 0.0;
};

struct ConstraintGrad {
  double d_radius = 0.0;
  double d_dist = 0.0;
};

// Numerically stable primitives over a logit vector.
double log_sum_exp(std::span<const double> logits);
Vec softmax(std::span<const double> logits);

SoftmaxWeights softmax_weights(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau);
double infonce_loss(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau);
Vec infonce_grad_anchor(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau);

SupportVector build_support_vector(VecView t_pos, VecView a_pos, double radius);

double svr_loss(const SupportVector& sup, VecView pos, const EmbeddingBatch& negs, double tau,
                Denominator denominator = Denominator::WithPositive);

// Gradients of svr_loss w.r.t. the anchor, positive, negatives and radius,
// with the radius held constant inside the support-vector Jacobian.
SvrGradients svr_grad_embeddings(const SupportVector& sup, VecView t_pos, VecView a_pos,
                                 const EmbeddingBatch& negs, double tau,
                                 Denominator denominator = Denominator::WithPositive);

// relu(R - dist) + relu(-R); the subgradient is 0 at both kinks.
double constraint_loss(double radius, double dist);
ConstraintGrad constraint_grad(double radius, double dist);

struct LossOptions {
  double tau = 0.07;
  double alpha = 1.0;
  double beta = 0.01;
  bool include_infonce = true;
  bool svr_t2a = false;
  bool svr_a2t = false;
  bool constraints = true;
  Denominator denominator = Denominator::WithPositive;
  unsigned threads = 1;
};

struct BatchLossResult {
  LossBreakdown loss;
  EmbeddingBatch grad_texts;
  EmbeddingBatch grad_audios;
  Vec grad_radii_t2a;
  Vec grad_radii_a2t;
  std::size_t degenerate_anchors = 0;
};

// Symmetric in-batch objective: row i of texts and audios is a positive pair,
// every other row is a negative. Per-anchor terms are averaged over the batch.
// Radii spans may be empty for directions without a support-vector term.
BatchLossResult supclap_batch_loss(const EmbeddingBatch& texts, const EmbeddingBatch& audios,
                                   std::span<const double> radii_t2a, std::span<const double> radii_a2t,
                                   const LossOptions& opts);

struct SiglipResult {
  double loss = 0.0;
  EmbeddingBatch grad_texts;
  EmbeddingBatch grad_audios;
  double grad_log_temp = 0.0;
  double grad_bias = 0.0;
};

inline const double kSiglipInitLogTemp = std::log(10.0);
inline constexpr double kSiglipInitBias = -10.0;

// Pairwise sigmoid loss with scale exp(log_temp) and additive bias.
SiglipResult siglip_batch_loss(const EmbeddingBatch& texts, const EmbeddingBatch& audios, double log_temp,
                               double bias, unsigned threads = 1);

}  // namespace svrlab
