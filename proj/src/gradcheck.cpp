#include "svrlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "svrlab/losses.hpp"
#include "svrlab/radius.hpp"
#include "svrlab/trainer.hpp"

namespace svrlab {

namespace {

EmbeddingBatch random_batch(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingBatch b(rows, dim, false);
  for (double& v : b.data()) v = n(rng);
  return b;
}

EmbeddingBatch normalized_rows(const EmbeddingBatch& raw) {
  EmbeddingBatch out(raw.rows(), raw.dim(), true);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const Vec u = l2_normalize(raw.row(i));
    std::copy(u.begin(), u.end(), out.row(i).begin());
  }
  return out;
}

EmbeddingBatch raw_gradient(const EmbeddingBatch& raw, const EmbeddingBatch& unit_grad) {
  EmbeddingBatch out(raw.rows(), raw.dim(), false);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const Vec g = l2_normalize_backward(raw.row(i), unit_grad.row(i));
    std::copy(g.begin(), g.end(), out.row(i).begin());
  }
  return out;
}

struct Accumulator {
  CheckResult r;
  Accumulator(std::string name, double tol) {
    r.name = std::move(name);
    r.tolerance = tol;
  }
  void add(VecView analytic, VecView numeric) {
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, numeric));
  }
  CheckResult finish(std::size_t trials) {
    r.trials = trials;
    r.passed = r.max_rel_error <= r.tolerance;
    return r;
  }
};

// Radii inside (0, dist) with a margin from both kinks, or deliberately
// outside the band so the hinge terms are active.
Vec pick_radii(const EmbeddingBatch& anchors, const EmbeddingBatch& gallery, bool out_of_band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 0.8);
  Vec r(anchors.rows());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double dist = norm(sub(gallery.row(i), anchors.row(i)));
    if (!out_of_band) {
      r[i] = u(rng) * dist;
    } else {
      r[i] = (i % 2 == 0) ? dist + 0.1 + u(rng) : -0.1 - u(rng);
    }
  }
  return r;
}

}  // namespace

double relative_error(VecView analytic, VecView numeric) {
  const Vec diff = sub(analytic, numeric);
  const double denom = std::max({norm(analytic), norm(numeric), 1e-8});
  return norm(diff) / denom;
}

Vec numeric_gradient(const std::function<double()>& f, VecSpan x, double h) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<CheckResult> gradcheck_losses(std::uint64_t seed, std::size_t trials) {
  struct Case {
    const char* name;
    bool infonce;
    bool svr;
    bool constraints;
    bool out_of_band;
    Denominator denominator;
  };
  const Case cases[] = {
      {"loss.infonce", true, false, false, false, Denominator::WithPositive},
      {"loss.svr_bidirectional", true, true, true, false, Denominator::WithPositive},
      {"loss.svr_only", false, true, false, false, Denominator::WithPositive},
      {"loss.svr_negatives_only", true, true, true, false, Denominator::NegativesOnly},
      {"loss.constraints_active", true, true, true, true, Denominator::WithPositive},
  };
  constexpr std::size_t kB = 4, kD = 5;
  std::vector<CheckResult> out;
  for (const Case& c : cases) {
    Accumulator acc(c.name, kComponentTolerance);
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
      EmbeddingBatch x = random_batch(kB, kD, rng);
      EmbeddingBatch y = random_batch(kB, kD, rng);
      LossOptions opts;
      opts.tau = 0.5;
      opts.alpha = 0.7;
      opts.beta = 0.3;
      opts.include_infonce = c.infonce;
      opts.svr_t2a = opts.svr_a2t = c.svr;
      opts.constraints = c.constraints;
      opts.denominator = c.denominator;
      Vec r_t2a, r_a2t;
      if (c.svr) {
        const EmbeddingBatch T = normalized_rows(x), A = normalized_rows(y);
        r_t2a = pick_radii(T, A, c.out_of_band, rng);
        r_a2t = pick_radii(A, T, c.out_of_band, rng);
      }
      auto f = [&] {
        return supclap_batch_loss(normalized_rows(x), normalized_rows(y), r_t2a, r_a2t, opts).loss.total;
      };
      const BatchLossResult res = supclap_batch_loss(normalized_rows(x), normalized_rows(y), r_t2a, r_a2t, opts);
      acc.add(raw_gradient(x, res.grad_texts).data(), numeric_gradient(f, x.data()));
      acc.add(raw_gradient(y, res.grad_audios).data(), numeric_gradient(f, y.data()));
      if (c.svr) {
        acc.add(res.grad_radii_t2a, numeric_gradient(f, r_t2a));
        acc.add(res.grad_radii_a2t, numeric_gradient(f, r_a2t));
      }
    }
    out.push_back(acc.finish(trials));
  }

  Accumulator sig("loss.siglip", kComponentTolerance);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (std::size_t t = 0; t < trials; ++t) {
    EmbeddingBatch x = random_batch(kB, kD, rng);
    EmbeddingBatch y = random_batch(kB, kD, rng);
    Vec scalars{kSiglipInitLogTemp + jitter(rng), kSiglipInitBias * 0.2 + jitter(rng)};
    auto f = [&] { return siglip_batch_loss(normalized_rows(x), normalized_rows(y), scalars[0], scalars[1]).loss; };
    const SiglipResult res = siglip_batch_loss(normalized_rows(x), normalized_rows(y), scalars[0], scalars[1]);
    sig.add(raw_gradient(x, res.grad_texts).data(), numeric_gradient(f, x.data()));
    sig.add(raw_gradient(y, res.grad_audios).data(), numeric_gradient(f, y.data()));
    const Vec analytic{res.grad_log_temp, res.grad_bias};
    sig.add(analytic, numeric_gradient(f, scalars));
  }
  out.push_back(sig.finish(trials));
  return out;
}

std::vector<CheckResult> gradcheck_radius(std::uint64_t seed, std::size_t trials) {
  constexpr std::size_t kB = 4;
  Accumulator params("radius.predictor_params", kComponentTolerance);
  Accumulator inputs("radius.predictor_inputs", kComponentTolerance);
  Accumulator scalar("radius.static", kComponentTolerance);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    RadiusModel rm = RadiusModel::make_dynamic(Direction::T2A, kB, 5, 3, rng);
    std::vector<SimilarityVector> s(kB);
    for (auto& v : s) {
      v.s_pos = n(rng);
      v.s_negs.resize(kB - 1);
      for (double& x : v.s_negs) x = n(rng);
    }
    Vec w(kB);
    for (double& x : w) x = n(rng);
    auto objective = [&](const std::vector<SimilarityVector>& sv) {
      const Vec r = rm.radius_for_similarities(sv);
      double acc = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) acc += w[i] * r[i];
      return acc;
    };
    for (Param* p : rm.params()) p->zero_grad();
    objective(s);
    const std::vector<Vec> ds = rm.backward(w, true);
    for (Param* p : rm.params()) {
      const Vec analytic = p->grad;
      params.add(analytic, numeric_gradient([&] { return objective(s); }, p->value));
    }
    for (std::size_t i = 0; i < kB; ++i) {
      Vec flat = s[i].flat();
      auto f = [&] {
        std::vector<SimilarityVector> sv = s;
        sv[i].s_pos = flat[0];
        std::copy(flat.begin() + 1, flat.end(), sv[i].s_negs.begin());
        return objective(sv);
      };
      inputs.add(ds[i], numeric_gradient(f, flat));
    }

    RadiusModel st = RadiusModel::make_static(Direction::A2T, n(rng));
    Param* p = st.params()[0];
    p->zero_grad();
    st.radius_for_similarities(s);
    st.backward(w);
    const Vec analytic = p->grad;
    scalar.add(analytic, numeric_gradient(
                             [&] {
                               const Vec r = st.radius_for_similarities(s);
                               double acc = 0.0;
                               for (std::size_t i = 0; i < r.size(); ++i) acc += w[i] * r[i];
                               return acc;
                             },
                             p->value));
  }
  return {params.finish(trials), inputs.finish(trials), scalar.finish(trials)};
}

CheckResult gradcheck_model(const TrainConfig& base_cfg, const std::string& name, std::uint64_t seed,
                            std::size_t trials) {
  constexpr std::size_t kFeat = 6, kEmbed = 4, kB = 3;
  TrainConfig cfg = base_cfg;
  cfg.batch_size = kB;
  cfg.encoder_hidden = 5;
  cfg.predictor_hidden1 = 4;
  cfg.predictor_hidden2 = 3;
  cfg.tau = 0.5;
  cfg.beta = 0.3;
  Accumulator acc(name, kEndToEndTolerance);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    cfg.seed = seed + t;
    Model model = make_model(cfg, kFeat, kEmbed);
    const EmbeddingBatch tf = random_batch(kB, kFeat, rng);
    const EmbeddingBatch af = random_batch(kB, kFeat, rng);

    ObjectiveOptions probe;
    probe.backprop = false;
    const StepDiagnostics first = batch_objective(model, tf, af, cfg, probe);
    // Stop-gradient semantics: the predictor sees the similarity vectors of
    // the unperturbed point. Full backprop lets them move.
    const std::vector<SimilarityVector> s_t2a = first.s_t2a;
    const std::vector<SimilarityVector> s_a2t = first.s_a2t;
    ObjectiveOptions opts;
    if (!cfg.radius_full_backprop) {
      if (model.radius_t2a && model.radius_t2a->mode() == RadiusMode::Dynamic) opts.frozen_t2a = &s_t2a;
      if (model.radius_a2t && model.radius_a2t->mode() == RadiusMode::Dynamic) opts.frozen_a2t = &s_a2t;
    }

    model.zero_grad();
    batch_objective(model, tf, af, cfg, opts);
    ObjectiveOptions eval = opts;
    eval.backprop = false;
    auto f = [&] { return batch_objective(model, tf, af, cfg, eval).loss.total; };
    for (Param* p : model.params()) {
      const Vec analytic = p->grad;
      acc.add(analytic, numeric_gradient(f, p->value));
    }
  }
  return acc.finish(trials);
}

std::vector<CheckResult> gradcheck_trainer(std::uint64_t seed, std::size_t trials) {
  struct Case {
    const char* name;
    BaseLoss base;
    SvrVariant svr;
    bool constraints;
    bool full_backprop;
    Denominator denominator;
  };
  const Case cases[] = {
      {"model.infonce", BaseLoss::InfoNCE, SvrVariant::None, false, false, Denominator::WithPositive},
      {"model.uni_static", BaseLoss::InfoNCE, SvrVariant::UniStatic, true, false, Denominator::WithPositive},
      {"model.bi_static", BaseLoss::InfoNCE, SvrVariant::BiStatic, true, false, Denominator::WithPositive},
      {"model.bi_static_no_constraints", BaseLoss::InfoNCE, SvrVariant::BiStatic, false, false,
       Denominator::WithPositive},
      {"model.bi_static_negatives_only", BaseLoss::InfoNCE, SvrVariant::BiStatic, true, false,
       Denominator::NegativesOnly},
      {"model.uni_dynamic", BaseLoss::InfoNCE, SvrVariant::UniDynamic, true, false, Denominator::WithPositive},
      {"model.bi_dynamic", BaseLoss::InfoNCE, SvrVariant::BiDynamic, true, false, Denominator::WithPositive},
      {"model.bi_dynamic_full_backprop", BaseLoss::InfoNCE, SvrVariant::BiDynamic, true, true,
       Denominator::WithPositive},
      {"model.siglip", BaseLoss::SigLIP, SvrVariant::None, false, false, Denominator::WithPositive},
      {"model.siglip_bi_static", BaseLoss::SigLIP, SvrVariant::BiStatic, true, false, Denominator::WithPositive},
  };
  std::vector<CheckResult> out;
  for (const Case& c : cases) {
    TrainConfig cfg;
    cfg.base_loss = c.base;
    cfg.svr = c.svr;
    cfg.constraints = c.constraints;
    cfg.radius_full_backprop = c.full_backprop;
    cfg.denominator = c.denominator;
    cfg.static_radius_init = 0.3;
    out.push_back(gradcheck_model(cfg, c.name, seed, trials));
  }
  return out;
}

}  // namespace svrlab
