#include "svrlab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "svrlab/container.hpp"
#include "svrlab/forces.hpp"
#include "svrlab/kernels.hpp"
#include "svrlab/metrics.hpp"
#include "svrlab/parallel.hpp"

namespace svrlab {

namespace {

constexpr std::uint64_t kInitStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kShuffleStream = 0xD1B54A32D192ED03ULL;

void add_into(EmbeddingBatch& dst, const EmbeddingBatch& src) { kernels::axpy(1.0, src.data(), dst.data()); }

// Adds dL/dS contributions to the embedding gradients. Row i of `anchors`
// produced S_i = [a_i.g_i, a_i.g_j (j != i)] / tau against `gallery`.
void scatter_similarity_grads(const std::vector<Vec>& ds, const EmbeddingBatch& anchors,
                              const EmbeddingBatch& gallery, double tau, EmbeddingBatch& grad_anchors,
                              EmbeddingBatch& grad_gallery) {
  const std::size_t b = anchors.rows();
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t slot = 1;
    for (std::size_t k = 0; k < b; ++k) {
      const double g = (k == i ? ds[i][0] : ds[i][slot++]) / tau;
      kernels::axpy(g, gallery.row(k), grad_anchors.row(i));
      kernels::axpy(g, anchors.row(i), grad_gallery.row(k));
    }
  }
}

double mean_perp_fraction(const EmbeddingBatch& anchors, const EmbeddingBatch& gallery, double tau) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    try {
      const ForceDecomposition f = decompose_forces(anchors.row(i), gallery.row(i), gallery.without_row(i), tau);
      const double g = norm(f.gradient());
      if (g < kZeroNormFloor) continue;
      acc += norm(f.perp_total()) / g;
      ++n;
    } catch (const Error& e) {
      if (e.code() != Errc::DegeneratePair) throw;
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

std::size_t out_of_band(const Vec& radii, const EmbeddingBatch& anchors, const EmbeddingBatch& gallery) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double dist = norm(sub(gallery.row(i), anchors.row(i)));
    if (radii[i] < 0.0 || radii[i] > dist) ++count;
  }
  return count;
}

double mean_of(const Vec& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void accumulate(LossBreakdown& acc, const LossBreakdown& l, double w) {
  acc.orig_t2a += w * l.orig_t2a;
  acc.orig_a2t += w * l.orig_a2t;
  acc.svr_t2a += w * l.svr_t2a;
  acc.svr_a2t += w * l.svr_a2t;
  acc.cons_t2a += w * l.cons_t2a;
  acc.cons_a2t += w * l.cons_a2t;
  acc.total += w * l.total;
}

// Mean of the step traces in [first, last).
MetricsRecord summarize_steps(const std::vector<StepTrace>& trace, std::size_t first, std::size_t last) {
  MetricsRecord m;
  const std::size_t n = last - first;
  if (n == 0) return m;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t s = first; s < last; ++s) {
    const StepTrace& t = trace[s];
    accumulate(m.loss, t.loss, w);
    m.drift_cos_t2a += w * t.drift_cos_t2a;
    m.drift_cos_a2t += w * t.drift_cos_a2t;
    m.mean_radius_t2a += w * t.mean_radius_t2a;
    m.mean_radius_a2t += w * t.mean_radius_a2t;
  }
  return m;
}

void copy_retrieval(MetricsRecord& dst, const MetricsRecord& src) {
  dst.r1_t2a = src.r1_t2a;
  dst.r5_t2a = src.r5_t2a;
  dst.r10_t2a = src.r10_t2a;
  dst.r1_a2t = src.r1_a2t;
  dst.r5_a2t = src.r5_a2t;
  dst.r10_a2t = src.r10_a2t;
  dst.map10_t2a = src.map10_t2a;
  dst.map10_a2t = src.map10_a2t;
}

StepTrace trace_of(const StepDiagnostics& d, std::size_t step, std::size_t epoch) {
  StepTrace t;
  t.step = step;
  t.epoch = epoch;
  t.loss = d.loss;
  t.drift_cos_t2a = d.drift_cos_t2a;
  t.drift_cos_a2t = d.drift_cos_a2t;
  t.perp_fraction_t2a = d.perp_fraction_t2a;
  t.perp_fraction_a2t = d.perp_fraction_a2t;
  t.mean_radius_t2a = mean_of(d.radii_t2a);
  t.mean_radius_a2t = mean_of(d.radii_a2t);
  t.radius_out_of_band = d.radius_out_of_band;
  return t;
}

std::vector<std::size_t> iota_rows(std::size_t begin, std::size_t count) {
  std::vector<std::size_t> rows(count);
  std::iota(rows.begin(), rows.end(), begin);
  return rows;
}

}  // namespace

std::vector<Param*> Model::params() {
  std::vector<Param*> out = text_encoder.params();
  for (Param* p : audio_encoder.params()) out.push_back(p);
  if (radius_t2a) {
    for (Param* p : radius_t2a->params()) out.push_back(p);
  }
  if (radius_a2t) {
    for (Param* p : radius_a2t->params()) out.push_back(p);
  }
  if (uses_siglip) {
    out.push_back(&siglip_log_temp);
    out.push_back(&siglip_bias);
  }
  return out;
}

std::vector<const Param*> Model::params() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<Model*>(this)->params()) out.push_back(p);
  return out;
}

void Model::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

Model make_model(const TrainConfig& cfg, std::size_t feature_dim, std::size_t embed_dim) {
  std::mt19937_64 rng(cfg.seed ^ kInitStream);
  Model m;
  m.text_encoder = Mlp("text_encoder", {feature_dim, cfg.encoder_hidden, embed_dim});
  m.audio_encoder = Mlp("audio_encoder", {feature_dim, cfg.encoder_hidden, embed_dim});
  m.text_encoder.init_uniform(rng);
  m.audio_encoder.init_uniform(rng);
  auto make_radius = [&](Direction dir) {
    if (cfg.dynamic_radius()) {
      return RadiusModel::make_dynamic(dir, cfg.batch_size, cfg.predictor_hidden1, cfg.predictor_hidden2, rng);
    }
    return RadiusModel::make_static(dir, cfg.static_radius_init);
  };
  if (cfg.svr_t2a()) m.radius_t2a = make_radius(Direction::T2A);
  if (cfg.svr_a2t()) m.radius_a2t = make_radius(Direction::A2T);
  m.uses_siglip = cfg.base_loss == BaseLoss::SigLIP;
  m.siglip_log_temp.value[0] = kSiglipInitLogTemp;
  m.siglip_bias.value[0] = kSiglipInitBias;
  return m;
}

EncodedBatch encode(const Mlp& encoder, const EmbeddingBatch& features) {
  EncodedBatch out;
  const std::size_t n = features.rows();
  const std::size_t d = encoder.output_width();
  out.raw = EmbeddingBatch(n, d, false);
  out.unit = EmbeddingBatch(n, d, true);
  out.caches.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.caches.push_back(encoder.forward(features.row(i)));
    const Vec& y = out.caches.back().output;
    std::copy(y.begin(), y.end(), out.raw.row(i).begin());
    const Vec u = l2_normalize(y);
    std::copy(u.begin(), u.end(), out.unit.row(i).begin());
  }
  return out;
}

EmbeddingBatch embed(const Mlp& encoder, const EmbeddingBatch& features, unsigned threads) {
  EmbeddingBatch out(features.rows(), encoder.output_width(), true);
  parallel_for(features.rows(), threads, [&](std::size_t i) {
    const Vec u = l2_normalize(encoder.infer(features.row(i)));
    std::copy(u.begin(), u.end(), out.row(i).begin());
  });
  return out;
}

double mean_drift_cosine(const EmbeddingBatch& updates, const EmbeddingBatch& anchors,
                         const EmbeddingBatch& positives) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    try {
      acc += drift_cosine(updates.row(i), anchors.row(i), positives.row(i));
      ++n;
    } catch (const Error& e) {
      if (e.code() != Errc::DegeneratePair && e.code() != Errc::ZeroUpdate) throw;
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

StepDiagnostics batch_objective(Model& model, const EmbeddingBatch& text_features,
                                const EmbeddingBatch& audio_features, const TrainConfig& cfg,
                                const ObjectiveOptions& opts) {
  const EncodedBatch et = encode(model.text_encoder, text_features);
  const EncodedBatch ea = encode(model.audio_encoder, audio_features);
  const EmbeddingBatch& T = et.unit;
  const EmbeddingBatch& A = ea.unit;
  const std::size_t b = T.rows();
  StepDiagnostics out;

  auto radii_for = [&](std::optional<RadiusModel>& rm, const EmbeddingBatch& anchors, const EmbeddingBatch& gallery,
                       const std::vector<SimilarityVector>* frozen, std::vector<SimilarityVector>& s_out) -> Vec {
    if (!rm) return {};
    if (rm->mode() == RadiusMode::Static) return rm->radius_for_anchors(T, A, cfg.tau);
    if (frozen != nullptr) {
      s_out = *frozen;
    } else {
      s_out.resize(b);
      for (std::size_t i = 0; i < b; ++i) s_out[i] = similarity_vector(anchors, gallery, i, cfg.tau);
    }
    return rm->radius_for_similarities(s_out);
  };
  out.radii_t2a = radii_for(model.radius_t2a, T, A, opts.frozen_t2a, out.s_t2a);
  out.radii_a2t = radii_for(model.radius_a2t, A, T, opts.frozen_a2t, out.s_a2t);

  BatchLossResult res = supclap_batch_loss(T, A, out.radii_t2a, out.radii_a2t, loss_options(cfg));
  out.loss = res.loss;
  std::optional<SiglipResult> sig;
  if (model.uses_siglip) {
    sig = siglip_batch_loss(T, A, model.siglip_log_temp.value[0], model.siglip_bias.value[0], cfg.threads);
    out.loss.orig_t2a = sig->loss;
    out.loss.total += sig->loss;
    add_into(res.grad_texts, sig->grad_texts);
    add_into(res.grad_audios, sig->grad_audios);
  }

  if (opts.backprop) {
    auto route_radius = [&](std::optional<RadiusModel>& rm, const Vec& grads, const EmbeddingBatch& anchors,
                            const EmbeddingBatch& gallery, EmbeddingBatch& g_anchors, EmbeddingBatch& g_gallery,
                            const std::vector<SimilarityVector>* frozen) {
      if (!rm) return;
      const bool through_inputs =
          cfg.radius_full_backprop && rm->mode() == RadiusMode::Dynamic && frozen == nullptr;
      const std::vector<Vec> ds = rm->backward(grads, through_inputs);
      if (through_inputs) scatter_similarity_grads(ds, anchors, gallery, cfg.tau, g_anchors, g_gallery);
    };
    route_radius(model.radius_t2a, res.grad_radii_t2a, T, A, res.grad_texts, res.grad_audios, opts.frozen_t2a);
    route_radius(model.radius_a2t, res.grad_radii_a2t, A, T, res.grad_audios, res.grad_texts, opts.frozen_a2t);
    if (sig) {
      model.siglip_log_temp.grad[0] += sig->grad_log_temp;
      model.siglip_bias.grad[0] += sig->grad_bias;
    }
  }

  // Gradient at the encoder outputs, i.e. with the radial part that the
  // normalization discards removed. Negated, this is the applied update.
  EmbeddingBatch step_t(b, T.dim(), false);
  EmbeddingBatch step_a(b, A.dim(), false);
  for (std::size_t i = 0; i < b; ++i) {
    const Vec gt = l2_normalize_backward(et.raw.row(i), res.grad_texts.row(i));
    const Vec ga = l2_normalize_backward(ea.raw.row(i), res.grad_audios.row(i));
    if (opts.backprop) {
      model.text_encoder.backward(et.caches[i], gt);
      model.audio_encoder.backward(ea.caches[i], ga);
    }
    std::copy(gt.begin(), gt.end(), step_t.row(i).begin());
    std::copy(ga.begin(), ga.end(), step_a.row(i).begin());
  }
  kernels::scale(-1.0, step_t.data());
  kernels::scale(-1.0, step_a.data());
  out.drift_cos_t2a = mean_drift_cosine(step_t, T, A);
  out.drift_cos_a2t = mean_drift_cosine(step_a, A, T);
  out.perp_fraction_t2a = mean_perp_fraction(T, A, cfg.tau);
  out.perp_fraction_a2t = mean_perp_fraction(A, T, cfg.tau);
  const std::size_t total_radii = out.radii_t2a.size() + out.radii_a2t.size();
  if (total_radii > 0) {
    out.radius_out_of_band = static_cast<double>(out_of_band(out.radii_t2a, T, A) + out_of_band(out.radii_a2t, A, T)) /
                             static_cast<double>(total_radii);
  }
  out.texts = T;
  out.audios = A;
  out.grad_texts = std::move(res.grad_texts);
  out.grad_audios = std::move(res.grad_audios);
  return out;
}

MetricsRecord retrieval_metrics(const Model& model, const Dataset& data, Split split, unsigned threads) {
  const auto rows = iota_rows(data.split_begin(split), data.split_size(split));
  const EmbeddingBatch T = embed(model.text_encoder, data.gather_text(rows), threads);
  const EmbeddingBatch A = embed(model.audio_encoder, data.gather_audio(rows), threads);
  const SimilarityMatrix t2a = similarity_matrix(T, A, threads);
  const RetrievalScores st = retrieval_scores(t2a);
  const RetrievalScores sa = retrieval_scores(t2a.transposed());
  MetricsRecord m;
  m.r1_t2a = st.r1;
  m.r5_t2a = st.r5;
  m.r10_t2a = st.r10;
  m.map10_t2a = st.map10;
  m.r1_a2t = sa.r1;
  m.r5_a2t = sa.r5;
  m.r10_a2t = sa.r10;
  m.map10_a2t = sa.map10;
  return m;
}

MetricsRecord evaluate(Model& model, const Dataset& data, Split split, const TrainConfig& cfg, std::size_t epoch) {
  const std::size_t b = cfg.batch_size;
  const std::size_t n = data.split_size(split);
  const std::size_t batches = n / b;
  std::vector<StepTrace> steps;
  ObjectiveOptions opts;
  opts.backprop = false;
  for (std::size_t k = 0; k < batches; ++k) {
    const auto rows = iota_rows(data.split_begin(split) + k * b, b);
    const StepDiagnostics d = batch_objective(model, data.gather_text(rows), data.gather_audio(rows), cfg, opts);
    steps.push_back(trace_of(d, k, epoch));
  }
  MetricsRecord m = summarize_steps(steps, 0, steps.size());
  m.epoch = epoch;
  copy_retrieval(m, retrieval_metrics(model, data, split, cfg.threads));
  return m;
}

RunArtifacts train(const TrainConfig& cfg, const Dataset& data) {
  validate(cfg);
  const std::size_t b = cfg.batch_size;
  if (data.num_train < b) throw Error(Errc::InvalidSpec, "train split is smaller than one batch");

  RunArtifacts run;
  Model model = make_model(cfg, data.feature_dim(), data.spec.embed_dim);

  MetricsRecord base = evaluate(model, data, Split::Train, cfg, 0);
  copy_retrieval(base, retrieval_metrics(model, data, Split::Test, cfg.threads));
  run.metrics.push_back(base);
  run.best_model = model;
  run.best_epoch = 0;
  double best_r1 = base.r1_t2a;

  AdamHyper hyper;
  hyper.lr = cfg.lr;
  std::mt19937_64 shuffle_rng(cfg.seed ^ kShuffleStream);
  std::vector<std::size_t> order(data.num_train);
  std::size_t step = 0;
  const std::size_t batches = data.num_train / b;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng() % (i + 1)]);
    const std::size_t first = run.trace.size();
    for (std::size_t k = 0; k < batches; ++k) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(k * b),
                                          order.begin() + static_cast<std::ptrdiff_t>((k + 1) * b));
      const EmbeddingBatch tf = data.gather_text(rows);
      const EmbeddingBatch af = data.gather_audio(rows);
      model.zero_grad();
      StepDiagnostics d = batch_objective(model, tf, af, cfg);
      ++step;
      for (Param* p : model.params()) p->step(hyper, step);
      if (cfg.drift_mode == DriftMode::PostAdam) {
        EmbeddingBatch dt = embed(model.text_encoder, tf);
        EmbeddingBatch da = embed(model.audio_encoder, af);
        kernels::axpy(-1.0, d.texts.data(), dt.data());
        kernels::axpy(-1.0, d.audios.data(), da.data());
        d.drift_cos_t2a = mean_drift_cosine(dt, d.texts, d.audios);
        d.drift_cos_a2t = mean_drift_cosine(da, d.audios, d.texts);
      }
      run.trace.push_back(trace_of(d, step, epoch));
    }
    MetricsRecord rec = summarize_steps(run.trace, first, run.trace.size());
    rec.epoch = epoch;
    copy_retrieval(rec, retrieval_metrics(model, data, Split::Test, cfg.threads));
    run.metrics.push_back(rec);
    if (rec.r1_t2a > best_r1) {
      best_r1 = rec.r1_t2a;
      run.best_epoch = epoch;
      run.best_model = model;
    }
  }
  run.final_model = std::move(model);
  return run;
}

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const TrainConfig& cfg, std::size_t feature_dim,
                                            std::size_t embed_dim, const nlohmann::json& extra) {
  Container c;
  nlohmann::json tensors = nlohmann::json::array();
  for (const Param* p : model.params()) {
    tensors.push_back({{"name", p->name}, {"shape", p->shape}});
    append_f64(c.payload, p->value);
  }
  c.header = {{"format_version", kFormatVersion}, {"kind", "checkpoint"}, {"dtype", "f64"},
              {"config", to_json(cfg)},          {"feature_dim", feature_dim}, {"embed_dim", embed_dim},
              {"tensors", tensors}};
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) c.header[k] = v;
  }
  return encode_container(c);
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Container c = decode_container(bytes);
  if (c.header.value("kind", "") != "checkpoint") throw Error(Errc::Format, "container is not a checkpoint");
  if (c.header.value("dtype", "") != "f64") throw Error(Errc::Format, "checkpoint dtype must be f64");
  LoadedCheckpoint out;
  try {
    out.cfg = train_config_from_json(c.header.at("config"));
    out.model = make_model(out.cfg, c.header.at("feature_dim").get<std::size_t>(),
                           c.header.at("embed_dim").get<std::size_t>());
    const auto& tensors = c.header.at("tensors");
    auto params = out.model.params();
    if (tensors.size() != params.size()) throw Error(Errc::Format, "checkpoint tensor count mismatch");
    std::size_t off = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (tensors[i].at("name") != params[i]->name ||
          tensors[i].at("shape").get<std::vector<std::size_t>>() != params[i]->shape) {
        throw Error(Errc::Format, "checkpoint tensor " + std::to_string(i) + " does not match the model layout");
      }
      params[i]->value = read_f64(c.payload, off, params[i]->size());
    }
    if (off != c.payload.size()) throw Error(Errc::Format, "trailing bytes after checkpoint payload");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("bad checkpoint header: ") + e.what());
  }
  out.header = std::move(c.header);
  return out;
}

void write_run(const std::string& dir, const RunArtifacts& run, const TrainConfig& cfg, const Dataset& data,
               const std::string& dataset_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const std::size_t m = data.feature_dim();
  const std::size_t d = data.spec.embed_dim;

  write_text_file((root / "config.json").string(), to_json(cfg).dump(2) + "\n");

  std::ostringstream metrics;
  write_metrics_csv(metrics, run.metrics);
  write_text_file((root / "metrics.csv").string(), metrics.str());
  std::ostringstream trace;
  write_trace_csv(trace, run.trace);
  write_text_file((root / "trace.csv").string(), trace.str());

  const nlohmann::json common = {{"dataset_hash", dataset_hash}};
  nlohmann::json final_extra = common;
  final_extra["epoch"] = run.metrics.empty() ? 0 : run.metrics.back().epoch;
  nlohmann::json best_extra = common;
  best_extra["epoch"] = run.best_epoch;
  write_file((root / "checkpoint_final.bin").string(), encode_checkpoint(run.final_model, cfg, m, d, final_extra));
  write_file((root / "checkpoint_best.bin").string(), encode_checkpoint(run.best_model, cfg, m, d, best_extra));

  nlohmann::json summary = {{"best_epoch", run.best_epoch}};
  if (!run.metrics.empty()) {
    summary["final"] = to_json(run.metrics.back());
    summary["best"] = to_json(run.metrics[run.best_epoch]);
  }
  write_text_file((root / "summary.json").string(), summary.dump(2) + "\n");

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json manifest = {{"config", to_json(cfg)},
                             {"dataset_hash", dataset_hash},
                             {"dataset_num_pairs", data.num_pairs()},
                             {"code_version", SVRLAB_VERSION},
                             {"seed", cfg.seed},
                             {"kernel_backend", kernels::active().name},
                             {"threads", cfg.threads},
                             {"written_utc", stamp}};
  write_text_file((root / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace svrlab
