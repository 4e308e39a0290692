#include "svrlab/losses.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "svrlab/kernels.hpp"
#include "svrlab/parallel.hpp"

namespace svrlab {
namespace {

// Logits anchor.g_k / tau over every gallery row.
Vec gallery_logits(VecView anchor, const EmbeddingBatch& gallery, double tau) {
  Vec logits(gallery.rows());
  const double inv_tau = 1.0 / tau;
  for (std::size_t k = 0; k < gallery.rows(); ++k) logits[k] = kernels::dot(anchor, gallery.row(k)) * inv_tau;
  return logits;
}

EmbeddingBatch stack_positive(VecView pos, const EmbeddingBatch& negs) {
  EmbeddingBatch gallery(negs.rows() + 1, pos.size(), negs.normalized());
  std::copy(pos.begin(), pos.end(), gallery.row(0).begin());
  std::copy(negs.data().begin(), negs.data().end(), gallery.data().begin() + pos.size());
  return gallery;
}

void check_gallery(VecView anchor, const EmbeddingBatch& negs, double tau) {
  if (negs.empty()) throw Error(Errc::BatchTooSmall, "at least one negative is required");
  if (negs.dim() != anchor.size()) throw Error(Errc::ShapeMismatch, "negative width differs from anchor");
  if (!(tau > 0.0)) throw Error(Errc::InvalidConfig, "tau must be positive");
}

// Support-vector term against a gallery whose row pos_idx is the positive.
// Returns the loss, fills weights w_k with dL/ds_k (s_k = t_sup.g_k / tau).
double svr_term(VecView t_sup, const EmbeddingBatch& gallery, std::size_t pos_idx, double tau,
                Denominator denominator, Vec& weights) {
  const Vec logits = gallery_logits(t_sup, gallery, tau);
  if (denominator == Denominator::WithPositive) {
    const double loss = log_sum_exp(logits) - logits[pos_idx];
    weights = softmax(logits);
    weights[pos_idx] -= 1.0;
    return loss;
  }
  Vec neg_logits;
  neg_logits.reserve(logits.size() - 1);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != pos_idx) neg_logits.push_back(logits[k]);
  }
  const double loss = log_sum_exp(neg_logits) - logits[pos_idx];
  const Vec q = softmax(neg_logits);
  weights.assign(logits.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) weights[k] = (k == pos_idx) ? -1.0 : q[j++];
  return loss;
}

// sum_k w_k g_k / tau
Vec weighted_gallery_sum(const EmbeddingBatch& gallery, const Vec& weights, double tau) {
  Vec out(gallery.dim(), 0.0);
  for (std::size_t k = 0; k < gallery.rows(); ++k) kernels::axpy(weights[k] / tau, gallery.row(k), out);
  return out;
}

struct AnchorTerms {
  double orig = 0.0;
  double svr = 0.0;
  double cons = 0.0;
  Vec g_anchor;
  Vec g_gallery;  // rows x dim, row-major
  double g_radius = 0.0;
  bool degenerate = false;
};

AnchorTerms anchor_terms(VecView anchor, const EmbeddingBatch& gallery, std::size_t pos_idx, bool with_svr,
                         double radius, const LossOptions& opts) {
  const std::size_t d = gallery.dim();
  const std::size_t n = gallery.rows();
  const double tau = opts.tau;
  AnchorTerms out;
  out.g_anchor.assign(d, 0.0);
  out.g_gallery.assign(n * d, 0.0);
  auto gallery_grad = [&](std::size_t k) { return VecSpan(out.g_gallery.data() + k * d, d); };

  if (opts.include_infonce) {
    const Vec logits = gallery_logits(anchor, gallery, tau);
    out.orig = log_sum_exp(logits) - logits[pos_idx];
    Vec w = softmax(logits);
    w[pos_idx] -= 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      kernels::axpy(w[k] / tau, gallery.row(k), out.g_anchor);
      kernels::axpy(w[k] / tau, anchor, gallery_grad(k));
    }
  }
  if (!with_svr) return out;

  VecView pos = gallery.row(pos_idx);
  Vec diff = sub(pos, anchor);
  const double dist = norm(diff);
  if (!(dist >= kDegeneratePairFloor)) {
    out.degenerate = true;
    return out;
  }
  Vec u_hat = scaled(diff, 1.0 / dist);
  Vec t_sup(anchor.begin(), anchor.end());
  kernels::axpy(radius, u_hat, t_sup);

  Vec w;
  out.svr = svr_term(t_sup, gallery, pos_idx, tau, opts.denominator, w);
  const Vec g_sup = weighted_gallery_sum(gallery, w, tau);
  const double alpha = opts.alpha;
  for (std::size_t k = 0; k < n; ++k) kernels::axpy(alpha * w[k] / tau, t_sup, gallery_grad(k));

  const double c = radius / dist;
  const Vec perp = project_perp(g_sup, u_hat);
  kernels::axpy(alpha, g_sup, out.g_anchor);
  kernels::axpy(-alpha * c, perp, out.g_anchor);
  kernels::axpy(alpha * c, perp, gallery_grad(pos_idx));
  out.g_radius = alpha * kernels::dot(u_hat, g_sup);

  if (opts.constraints) {
    out.cons = constraint_loss(radius, dist);
    const ConstraintGrad cg = constraint_grad(radius, dist);
    out.g_radius += opts.beta * cg.d_radius;
    if (cg.d_dist != 0.0) {
      // d dist / d anchor = -u_hat, d dist / d pos = +u_hat
      kernels::axpy(-opts.beta * cg.d_dist, u_hat, out.g_anchor);
      kernels::axpy(opts.beta * cg.d_dist, u_hat, gallery_grad(pos_idx));
    }
  }
  return out;
}

}  // namespace

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - m);
  return m + std::log(acc);
}

Vec softmax(std::span<const double> logits) {
  Vec out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double m = *std::max_element(out.begin(), out.end());
  double acc = 0.0;
  for (double& v : out) {
    v = std::exp(v - m);
    acc += v;
  }
  for (double& v : out) v /= acc;
  return out;
}

SoftmaxWeights softmax_weights(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau) {
  check_gallery(anchor, negs, tau);
  const Vec p = softmax(gallery_logits(anchor, stack_positive(pos, negs), tau));
  SoftmaxWeights out;
  out.p_pos = p[0];
  out.p_neg.assign(p.begin() + 1, p.end());
  return out;
}

double infonce_loss(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau) {
  check_gallery(anchor, negs, tau);
  const Vec logits = gallery_logits(anchor, stack_positive(pos, negs), tau);
  return log_sum_exp(logits) - logits[0];
}

Vec infonce_grad_anchor(VecView anchor, VecView pos, const EmbeddingBatch& negs, double tau) {
  const SoftmaxWeights w = softmax_weights(anchor, pos, negs, tau);
  Vec g = scaled(pos, (w.p_pos - 1.0) / tau);
  for (std::size_t j = 0; j < negs.rows(); ++j) kernels::axpy(w.p_neg[j] / tau, negs.row(j), g);
  return g;
}

SupportVector build_support_vector(VecView t_pos, VecView a_pos, double radius) {
  SupportVector sup;
  sup.u_hat = pull_unit_vector(t_pos, a_pos);
  sup.anchor_to_pos_dist = norm(sub(a_pos, t_pos));
  sup.radius = radius;
  sup.t_sup.assign(t_pos.begin(), t_pos.end());
  kernels::axpy(radius, sup.u_hat, sup.t_sup);
  return sup;
}

double svr_loss(const SupportVector& sup, VecView pos, const EmbeddingBatch& negs, double tau,
                Denominator denominator) {
  check_gallery(sup.t_sup, negs, tau);
  Vec w;
  return svr_term(sup.t_sup, stack_positive(pos, negs), 0, tau, denominator, w);
}

SvrGradients svr_grad_embeddings(const SupportVector& sup, VecView t_pos, VecView a_pos,
                                 const EmbeddingBatch& negs, double tau, Denominator denominator) {
  check_gallery(t_pos, negs, tau);
  const double dist = norm(sub(a_pos, t_pos));
  if (!(dist >= kDegeneratePairFloor)) throw Error(Errc::DegeneratePair, "anchor coincides with its positive");

  const EmbeddingBatch gallery = stack_positive(a_pos, negs);
  Vec w;
  svr_term(sup.t_sup, gallery, 0, tau, denominator, w);
  const Vec g_sup = weighted_gallery_sum(gallery, w, tau);

  SvrGradients out;
  const double c = sup.radius / dist;
  const Vec perp = project_perp(g_sup, sup.u_hat);
  out.grad_t = g_sup;
  kernels::axpy(-c, perp, out.grad_t);
  out.grad_a_pos = scaled(sup.t_sup, w[0] / tau);
  kernels::axpy(c, perp, out.grad_a_pos);
  out.grad_negs = EmbeddingBatch(negs.rows(), negs.dim(), false);
  for (std::size_t j = 0; j < negs.rows(); ++j) kernels::axpy(w[j + 1] / tau, sup.t_sup, out.grad_negs.row(j));
  out.grad_radius = kernels::dot(sup.u_hat, g_sup);
  return out;
}

double constraint_loss(double radius, double dist) {
  return std::max(0.0, radius - dist) + std::max(0.0, -radius);
}

ConstraintGrad constraint_grad(double radius, double dist) {
  ConstraintGrad g;
  if (radius > dist) {
    g.d_radius += 1.0;
    g.d_dist -= 1.0;
  }
  if (radius < 0.0) g.d_radius -= 1.0;
  return g;
}

BatchLossResult supclap_batch_loss(const EmbeddingBatch& texts, const EmbeddingBatch& audios,
                                   std::span<const double> radii_t2a, std::span<const double> radii_a2t,
                                   const LossOptions& opts) {
  const std::size_t b = texts.rows();
  const std::size_t d = texts.dim();
  if (b < 2) throw Error(Errc::BatchTooSmall, "batch needs at least 2 pairs, got " + std::to_string(b));
  if (audios.rows() != b || audios.dim() != d) throw Error(Errc::ShapeMismatch, "text/audio batch shapes differ");
  if (!(opts.tau > 0.0)) throw Error(Errc::InvalidConfig, "tau must be positive");
  if (opts.svr_t2a && radii_t2a.size() != b) throw Error(Errc::ShapeMismatch, "need one t2a radius per anchor");
  if (opts.svr_a2t && radii_a2t.size() != b) throw Error(Errc::ShapeMismatch, "need one a2t radius per anchor");

  // Slot layout: [0, b) text anchors (t2a), [b, 2b) audio anchors (a2t).
  std::vector<AnchorTerms> slots(2 * b);
  parallel_for(2 * b, opts.threads, [&](std::size_t s) {
    if (s < b) {
      const double r = opts.svr_t2a ? radii_t2a[s] : 0.0;
      slots[s] = anchor_terms(texts.row(s), audios, s, opts.svr_t2a, r, opts);
    } else {
      const std::size_t i = s - b;
      const double r = opts.svr_a2t ? radii_a2t[i] : 0.0;
      slots[s] = anchor_terms(audios.row(i), texts, i, opts.svr_a2t, r, opts);
    }
  });

  BatchLossResult out;
  out.grad_texts = EmbeddingBatch(b, d, false);
  out.grad_audios = EmbeddingBatch(b, d, false);
  out.grad_radii_t2a.assign(opts.svr_t2a ? b : 0, 0.0);
  out.grad_radii_a2t.assign(opts.svr_a2t ? b : 0, 0.0);
  const double inv_b = 1.0 / static_cast<double>(b);
  LossBreakdown& L = out.loss;
  for (std::size_t s = 0; s < 2 * b; ++s) {
    const bool t2a = s < b;
    const std::size_t i = t2a ? s : s - b;
    const AnchorTerms& at = slots[s];
    EmbeddingBatch& anchor_grad = t2a ? out.grad_texts : out.grad_audios;
    EmbeddingBatch& gallery_grad = t2a ? out.grad_audios : out.grad_texts;
    kernels::axpy(inv_b, at.g_anchor, anchor_grad.row(i));
    kernels::axpy(inv_b, at.g_gallery, gallery_grad.data());
    if (t2a) {
      L.orig_t2a += at.orig * inv_b;
      L.svr_t2a += at.svr * inv_b;
      L.cons_t2a += at.cons * inv_b;
      if (opts.svr_t2a) out.grad_radii_t2a[i] = at.g_radius * inv_b;
    } else {
      L.orig_a2t += at.orig * inv_b;
      L.svr_a2t += at.svr * inv_b;
      L.cons_a2t += at.cons * inv_b;
      if (opts.svr_a2t) out.grad_radii_a2t[i] = at.g_radius * inv_b;
    }
    if (at.degenerate) ++out.degenerate_anchors;
  }
  L.total = L.orig_t2a + L.orig_a2t + opts.alpha * (L.svr_t2a + L.svr_a2t) +
            (opts.constraints ? opts.beta * (L.cons_t2a + L.cons_a2t) : 0.0);
  return out;
}

namespace {

// -log(sigmoid(x)) without overflow
double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct SiglipRow {
  double loss = 0.0;
  Vec g_text;
  Vec g_audio;  // b x d
  double g_log_temp = 0.0;
  double g_bias = 0.0;
};

}  // namespace

SiglipResult siglip_batch_loss(const EmbeddingBatch& texts, const EmbeddingBatch& audios, double log_temp,
                               double bias, unsigned threads) {
  const std::size_t b = texts.rows();
  const std::size_t d = texts.dim();
  if (b < 2) throw Error(Errc::BatchTooSmall, "batch needs at least 2 pairs, got " + std::to_string(b));
  if (audios.rows() != b || audios.dim() != d) throw Error(Errc::ShapeMismatch, "text/audio batch shapes differ");
  const double scale = std::exp(log_temp);

  std::vector<SiglipRow> rows(b);
  parallel_for(b, threads, [&](std::size_t i) {
    SiglipRow& r = rows[i];
    r.g_text.assign(d, 0.0);
    r.g_audio.assign(b * d, 0.0);
    for (std::size_t j = 0; j < b; ++j) {
      const double z = (i == j) ? 1.0 : -1.0;
      const double cosv = kernels::dot(texts.row(i), audios.row(j));
      const double logit = scale * cosv + bias;
      r.loss += neg_log_sigmoid(z * logit);
      // d/dlogit of -log sigmoid(z * logit)
      const double g = -z * sigmoid(-z * logit);
      kernels::axpy(g * scale, audios.row(j), r.g_text);
      kernels::axpy(g * scale, texts.row(i), VecSpan(r.g_audio.data() + j * d, d));
      r.g_log_temp += g * scale * cosv;
      r.g_bias += g;
    }
  });

  SiglipResult out;
  out.grad_texts = EmbeddingBatch(b, d, false);
  out.grad_audios = EmbeddingBatch(b, d, false);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    out.loss += rows[i].loss * inv_b;
    kernels::axpy(inv_b, rows[i].g_text, out.grad_texts.row(i));
    kernels::axpy(inv_b, rows[i].g_audio, out.grad_audios.data());
    out.grad_log_temp += rows[i].g_log_temp * inv_b;
    out.grad_bias += rows[i].g_bias * inv_b;
  }
  return out;
}

}  // namespace svrlab
