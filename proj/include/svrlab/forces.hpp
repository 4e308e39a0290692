#pragma once

#include <cstddef>
#include <vector>

#include "svrlab/core_math.hpp"
#include "svrlab/losses.hpp"

namespace svrlab {

struct NegativeForce {
  Vec push;
  Vec parallel;
  Vec perp;
};

// InfoNCE anchor gradient split into the pull from the positive and the
// per-negative pushes, each push further split against the pull direction.
struct ForceDecomposition {
  Vec f_pull;
  Vec f_push_total;
  std::vector<NegativeForce> per_negative;
  Vec u_hat;

  Vec gradient() const { return add(f_pull, f_push_total); }
  Vec perp_total() const;
};

ForceDecomposition decompose_forces(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau);

// Combined push from negative j once the support-vector term is added.
struct ScaledPush {
  Vec parallel;          // F_par,j
  Vec perp;              // F_perp,j
  double p_neg = 0.0;    // P_j at the anchor
  double p_sup = 0.0;    // P_sup,j at the support vector
  double parallel_coefficient = 0.0;
  double perp_coefficient = 0.0;
};

// P_j / tau + alpha * (P_sup_j / tau) * (1 - R / dist)
double perp_push_coefficient(double p_neg, double p_sup, double tau, double alpha, double radius, double dist);

std::vector<ScaledPush> svr_scaled_push(VecView anchor, VecView pos, const SupportVector& sup,
                                        const EmbeddingBatch& negs, double tau, double alpha);

// Cosine between an applied update and the unit pull direction t -> a.
double drift_cosine(VecView update_vector, VecView t_pos, VecView a_pos);

struct DriftSample {
  std::size_t step = 0;
  double cosine_update_vs_pull = 0.0;
  double perp_fraction = 0.0;  // ||sum_j f_perp,j|| / ||grad L||
};

}  // namespace svrlab
