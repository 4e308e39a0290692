#include "svrlab/forces.hpp"

#include "svrlab/kernels.hpp"

namespace svrlab {

Vec ForceDecomposition::perp_total() const {
  Vec out(f_pull.size(), 0.0);
  for (const auto& f : per_negative) kernels::axpy(1.0, f.perp, out);
  return out;
}

ForceDecomposition decompose_forces(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau) {
  ForceDecomposition out;
  out.u_hat = pull_unit_vector(anchor, pos);
  const SoftmaxWeights w = softmax_weights(anchor, pos, negs, tau);
  out.f_pull = scaled(pos, (w.p_pos - 1.0) / tau);
  out.f_push_total.assign(anchor.size(), 0.0);
  out.per_negative.reserve(negs.rows());
  for (std::size_t j = 0; j < negs.rows(); ++j) {
    NegativeForce f;
    f.push = scaled(negs.row(j), w.p_neg[j] / tau);
    f.parallel = project_parallel(f.push, out.u_hat);
    f.perp = sub(f.push, f.parallel);
    kernels::axpy(1.0, f.push, out.f_push_total);
    out.per_negative.push_back(std::move(f));
  }
  return out;
}

double perp_push_coefficient(double p_neg, double p_sup, double tau, double alpha, double radius, double dist) {
  return p_neg / tau + alpha * (p_sup / tau) * (1.0 - radius / dist);
}

std::vector<ScaledPush> svr_scaled_push(VecView anchor, VecView pos, const SupportVector& sup,
                                        const EmbeddingBatch& negs, double tau, double alpha) {
  const Vec u_hat = pull_unit_vector(anchor, pos);
  const double dist = norm(sub(pos, anchor));
  const SoftmaxWeights w = softmax_weights(anchor, pos, negs, tau);
  // P_sup,j uses the same softmax with the support vector as anchor. It is
  // not unit norm, so the logits are formed directly.
  Vec logits(negs.rows() + 1);
  logits[0] = kernels::dot(sup.t_sup, pos) / tau;
  for (std::size_t j = 0; j < negs.rows(); ++j) logits[j + 1] = kernels::dot(sup.t_sup, negs.row(j)) / tau;
  const Vec p_sup = softmax(logits);

  std::vector<ScaledPush> out(negs.rows());
  for (std::size_t j = 0; j < negs.rows(); ++j) {
    ScaledPush& s = out[j];
    s.p_neg = w.p_neg[j];
    s.p_sup = p_sup[j + 1];
    s.parallel_coefficient = s.p_neg / tau + alpha * s.p_sup / tau;
    s.perp_coefficient = perp_push_coefficient(s.p_neg, s.p_sup, tau, alpha, sup.radius, dist);
    const Vec a_par = project_parallel(negs.row(j), u_hat);
    const Vec a_perp = sub(negs.row(j), a_par);
    s.parallel = scaled(a_par, s.parallel_coefficient);
    s.perp = scaled(a_perp, s.perp_coefficient);
  }
  return out;
}

double drift_cosine(VecView update_vector, VecView t_pos, VecView a_pos) {
  if (!(norm(update_vector) >= kZeroNormFloor)) throw Error(Errc::ZeroUpdate, "update vector is zero");
  const Vec u_hat = pull_unit_vector(t_pos, a_pos);
  return cosine(update_vector, u_hat);
}

}  // namespace svrlab
