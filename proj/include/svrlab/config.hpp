#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "svrlab/losses.hpp"

namespace svrlab {

// Desk-scale synthetic paired-feature task.
struct SyntheticDatasetSpec {
  std::size_t num_pairs = 2000;
  std::size_t latent_dim = 8;
  std::size_t feature_dim = 16;
  std::size_t embed_dim = 32;
  std::size_t num_clusters = 4;
  double within_cluster_sigma = 0.6;
  double feature_noise_sigma = 0.3;
  std::uint64_t seed = 1;
};

enum class BaseLoss { InfoNCE, SigLIP };
enum class SvrVariant { None, UniStatic, BiStatic, UniDynamic, BiDynamic };
enum class DriftMode { PreAdam, PostAdam };

struct TrainConfig {
  double tau = 0.07;
  double alpha = 1.0;
  double beta = 0.01;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  BaseLoss base_loss = BaseLoss::InfoNCE;
  SvrVariant svr = SvrVariant::None;
  bool constraints = true;
  Denominator denominator = Denominator::WithPositive;
  DriftMode drift_mode = DriftMode::PreAdam;
  std::uint64_t seed = 1;
  std::size_t encoder_hidden = 64;
  std::size_t predictor_hidden1 = 32;
  std::size_t predictor_hidden2 = 16;
  double static_radius_init = 0.1;
  // Backpropagate through the predictor's similarity inputs into the
  // embeddings. Off by default: radii are constants w.r.t. the embeddings.
  bool radius_full_backprop = false;
  unsigned threads = 1;

  bool svr_t2a() const noexcept { return svr != SvrVariant::None; }
  bool svr_a2t() const noexcept { return svr == SvrVariant::BiStatic || svr == SvrVariant::BiDynamic; }
  bool dynamic_radius() const noexcept { return svr == SvrVariant::UniDynamic || svr == SvrVariant::BiDynamic; }
};

std::string_view to_string(BaseLoss v) noexcept;
std::string_view to_string(SvrVariant v) noexcept;
std::string_view to_string(DriftMode v) noexcept;
std::string_view to_string(Denominator v) noexcept;
BaseLoss parse_base_loss(std::string_view s);
SvrVariant parse_svr_variant(std::string_view s);
DriftMode parse_drift_mode(std::string_view s);
Denominator parse_denominator(std::string_view s);

// Throws InvalidSpec / InvalidConfig on violated invariants.
void validate(const SyntheticDatasetSpec& spec, std::size_t batch_size = 2);
void validate(const TrainConfig& cfg);

LossOptions loss_options(const TrainConfig& cfg);

nlohmann::json to_json(const SyntheticDatasetSpec& spec);
nlohmann::json to_json(const TrainConfig& cfg);
// Missing keys keep their defaults; unknown keys and wrong types throw.
SyntheticDatasetSpec dataset_spec_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);

}  // namespace svrlab
