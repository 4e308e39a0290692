#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "svrlab/config.hpp"
#include "svrlab/dataset.hpp"
#include "svrlab/losses.hpp"
#include "svrlab/mlp.hpp"
#include "svrlab/radius.hpp"
#include "svrlab/report.hpp"

namespace svrlab {

// Two feature encoders (feature_dim -> hidden -> embed_dim, L2-normalized
// output) plus whatever the configured objective learns alongside them.
struct Model {
  Mlp text_encoder;
  Mlp audio_encoder;
  std::optional<RadiusModel> radius_t2a;
  std::optional<RadiusModel> radius_a2t;
  Param siglip_log_temp{"siglip.log_temp", {1}};
  Param siglip_bias{"siglip.bias", {1}};
  bool uses_siglip = false;

  // Manifest order: encoders, radius models, SigLIP scalars.
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  void zero_grad();
};

Model make_model(const TrainConfig& cfg, std::size_t feature_dim, std::size_t embed_dim);

struct EncodedBatch {
  EmbeddingBatch raw;   // encoder outputs before normalization
  EmbeddingBatch unit;  // normalized rows
  std::vector<Mlp::Cache> caches;
};

EncodedBatch encode(const Mlp& encoder, const EmbeddingBatch& features);
// Normalized embeddings only, for evaluation.
EmbeddingBatch embed(const Mlp& encoder, const EmbeddingBatch& features, unsigned threads = 1);

struct ObjectiveOptions {
  bool backprop = true;
  // Similarity vectors fed to dynamic predictors instead of the ones
  // computed from the current embeddings (stop-gradient checks).
  const std::vector<SimilarityVector>* frozen_t2a = nullptr;
  const std::vector<SimilarityVector>* frozen_a2t = nullptr;
};

struct StepDiagnostics {
  LossBreakdown loss;
  EmbeddingBatch texts;
  EmbeddingBatch audios;
  EmbeddingBatch grad_texts;  // d total / d normalized text embedding
  EmbeddingBatch grad_audios;
  Vec radii_t2a;
  Vec radii_a2t;
  std::vector<SimilarityVector> s_t2a;
  std::vector<SimilarityVector> s_a2t;
  double drift_cos_t2a = 0.0;
  double drift_cos_a2t = 0.0;
  double perp_fraction_t2a = 0.0;
  double perp_fraction_a2t = 0.0;
  double radius_out_of_band = 0.0;
};

// Forward pass of the full objective on one batch of features. With
// backprop, parameter gradients are accumulated into the model.
StepDiagnostics batch_objective(Model& model, const EmbeddingBatch& text_features,
                                const EmbeddingBatch& audio_features, const TrainConfig& cfg,
                                const ObjectiveOptions& opts = {});

// Mean per-anchor cosine between -grad (or an applied step) and the pull direction.
double mean_drift_cosine(const EmbeddingBatch& updates, const EmbeddingBatch& anchors,
                         const EmbeddingBatch& positives);

struct RunArtifacts {
  std::vector<MetricsRecord> metrics;  // row 0 is the untrained model
  std::vector<StepTrace> trace;
  Model final_model;
  Model best_model;
  std::size_t best_epoch = 0;
};

RunArtifacts train(const TrainConfig& cfg, const Dataset& data);

// Losses, drift and radius statistics over consecutive batches of a split
// without updating the model, plus retrieval metrics on that split.
MetricsRecord evaluate(Model& model, const Dataset& data, Split split, const TrainConfig& cfg,
                       std::size_t epoch = 0);

// Retrieval-only metrics on a split.
MetricsRecord retrieval_metrics(const Model& model, const Dataset& data, Split split, unsigned threads = 1);

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const TrainConfig& cfg, std::size_t feature_dim,
                                            std::size_t embed_dim, const nlohmann::json& extra = {});
struct LoadedCheckpoint {
  Model model;
  TrainConfig cfg;
  nlohmann::json header;
};
LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Writes config.json, manifest.json, metrics.csv, trace.csv, summary.json and
// checkpoint_{final,best}.bin into `dir`.
void write_run(const std::string& dir, const RunArtifacts& run, const TrainConfig& cfg, const Dataset& data,
               const std::string& dataset_hash);

}  // namespace svrlab
