#include "svrlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace svrlab {

using nlohmann::json;

std::string_view to_string(BaseLoss v) noexcept { return v == BaseLoss::InfoNCE ? "infonce" : "siglip"; }

std::string_view to_string(SvrVariant v) noexcept {
  switch (v) {
    case SvrVariant::None: return "none";
    case SvrVariant::UniStatic: return "uni-static";
    case SvrVariant::BiStatic: return "bi-static";
    case SvrVariant::UniDynamic: return "uni-dynamic";
    case SvrVariant::BiDynamic: return "bi-dynamic";
  }
  return "none";
}

std::string_view to_string(DriftMode v) noexcept { return v == DriftMode::PreAdam ? "pre-adam" : "post-adam"; }

std::string_view to_string(Denominator v) noexcept {
  return v == Denominator::WithPositive ? "with-positive" : "negatives-only";
}

BaseLoss parse_base_loss(std::string_view s) {
  if (s == "infonce") return BaseLoss::InfoNCE;
  if (s == "siglip") return BaseLoss::SigLIP;
  throw Error(Errc::InvalidConfig, "unknown loss '" + std::string(s) + "'");
}

SvrVariant parse_svr_variant(std::string_view s) {
  for (SvrVariant v : {SvrVariant::None, SvrVariant::UniStatic, SvrVariant::BiStatic, SvrVariant::UniDynamic,
                       SvrVariant::BiDynamic}) {
    if (s == to_string(v)) return v;
  }
  throw Error(Errc::InvalidConfig, "unknown svr variant '" + std::string(s) + "'");
}

DriftMode parse_drift_mode(std::string_view s) {
  if (s == "pre-adam") return DriftMode::PreAdam;
  if (s == "post-adam") return DriftMode::PostAdam;
  throw Error(Errc::InvalidConfig, "unknown drift mode '" + std::string(s) + "'");
}

Denominator parse_denominator(std::string_view s) {
  if (s == "with-positive") return Denominator::WithPositive;
  if (s == "negatives-only") return Denominator::NegativesOnly;
  throw Error(Errc::InvalidConfig, "unknown denominator mode '" + std::string(s) + "'");
}

void validate(const SyntheticDatasetSpec& spec, std::size_t batch_size) {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidSpec, m); };
  if (spec.num_pairs < 2 * batch_size) fail("num_pairs must be at least 2 * batch_size");
  if (spec.latent_dim < 2 || spec.feature_dim < 2 || spec.embed_dim < 2) fail("all dimensions must be >= 2");
  if (spec.num_clusters < 1) fail("num_clusters must be >= 1");
  if (!(spec.within_cluster_sigma >= 0.0) || !(spec.feature_noise_sigma >= 0.0)) fail("sigmas must be >= 0");
  if (!std::isfinite(spec.within_cluster_sigma) || !std::isfinite(spec.feature_noise_sigma)) {
    fail("sigmas must be finite");
  }
}

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) fail("tau must be > 0");
  if (!(cfg.alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(cfg.beta >= 0.0)) fail("beta must be >= 0");
  if (!(cfg.lr > 0.0)) fail("lr must be > 0");
  if (cfg.batch_size < 2) fail("batch_size must be >= 2");
  if (cfg.encoder_hidden < 1 || cfg.predictor_hidden1 < 1 || cfg.predictor_hidden2 < 1) {
    fail("hidden widths must be >= 1");
  }
  if (cfg.threads < 1) fail("threads must be >= 1");
}

LossOptions loss_options(const TrainConfig& cfg) {
  LossOptions o;
  o.tau = cfg.tau;
  o.alpha = cfg.alpha;
  o.beta = cfg.beta;
  o.include_infonce = cfg.base_loss == BaseLoss::InfoNCE;
  o.svr_t2a = cfg.svr_t2a();
  o.svr_a2t = cfg.svr_a2t();
  o.constraints = cfg.constraints;
  o.denominator = cfg.denominator;
  o.threads = cfg.threads;
  return o;
}

json to_json(const SyntheticDatasetSpec& s) {
  return json{{"num_pairs", s.num_pairs},
              {"latent_dim", s.latent_dim},
              {"feature_dim", s.feature_dim},
              {"embed_dim", s.embed_dim},
              {"num_clusters", s.num_clusters},
              {"within_cluster_sigma", s.within_cluster_sigma},
              {"feature_noise_sigma", s.feature_noise_sigma},
              {"seed", s.seed}};
}

json to_json(const TrainConfig& c) {
  return json{{"tau", c.tau},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"lr", c.lr},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"loss", to_string(c.base_loss)},
              {"svr", to_string(c.svr)},
              {"constraints", c.constraints},
              {"denominator", to_string(c.denominator)},
              {"drift_mode", to_string(c.drift_mode)},
              {"seed", c.seed},
              {"encoder_hidden", c.encoder_hidden},
              {"predictor_hidden", {c.predictor_hidden1, c.predictor_hidden2}},
              {"static_radius_init", c.static_radius_init},
              {"radius_full_backprop", c.radius_full_backprop}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, Errc code) {
  if (!j.is_object()) throw Error(code, "expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(code, "unknown key '" + key + "'");
  }
}

template <class T>
void read_field(const json& j, const char* key, T& out, Errc code) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw Error(code, std::string("'") + key + "' must be a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
        throw Error(code, std::string("'") + key + "' must be a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw Error(code, std::string("'") + key + "' must be a number");
    }
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw Error(code, std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string read_string(const json& j, const char* key, std::string fallback, Errc code) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw Error(code, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

SyntheticDatasetSpec dataset_spec_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidSpec;
  reject_unknown(j,
                 {"num_pairs", "latent_dim", "feature_dim", "embed_dim", "num_clusters", "within_cluster_sigma",
                  "feature_noise_sigma", "seed"},
                 code);
  SyntheticDatasetSpec s;
  read_field(j, "num_pairs", s.num_pairs, code);
  read_field(j, "latent_dim", s.latent_dim, code);
  read_field(j, "feature_dim", s.feature_dim, code);
  read_field(j, "embed_dim", s.embed_dim, code);
  read_field(j, "num_clusters", s.num_clusters, code);
  read_field(j, "within_cluster_sigma", s.within_cluster_sigma, code);
  read_field(j, "feature_noise_sigma", s.feature_noise_sigma, code);
  read_field(j, "seed", s.seed, code);
  return s;
}

TrainConfig train_config_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidConfig;
  reject_unknown(j,
                 {"tau", "alpha", "beta", "lr", "batch_size", "epochs", "loss", "svr", "constraints", "denominator",
                  "drift_mode", "seed", "encoder_hidden", "predictor_hidden", "static_radius_init",
                  "radius_full_backprop", "dataset"},
                 code);
  TrainConfig c;
  read_field(j, "tau", c.tau, code);
  read_field(j, "alpha", c.alpha, code);
  read_field(j, "beta", c.beta, code);
  read_field(j, "lr", c.lr, code);
  read_field(j, "batch_size", c.batch_size, code);
  read_field(j, "epochs", c.epochs, code);
  c.base_loss = parse_base_loss(read_string(j, "loss", "infonce", code));
  c.svr = parse_svr_variant(read_string(j, "svr", "none", code));
  read_field(j, "constraints", c.constraints, code);
  c.denominator = parse_denominator(read_string(j, "denominator", "with-positive", code));
  c.drift_mode = parse_drift_mode(read_string(j, "drift_mode", "pre-adam", code));
  read_field(j, "seed", c.seed, code);
  read_field(j, "encoder_hidden", c.encoder_hidden, code);
  if (auto it = j.find("predictor_hidden"); it != j.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned()) {
      throw Error(code, "'predictor_hidden' must be an array of two positive integers");
    }
    c.predictor_hidden1 = (*it)[0].get<std::size_t>();
    c.predictor_hidden2 = (*it)[1].get<std::size_t>();
  }
  read_field(j, "static_radius_init", c.static_radius_init, code);
  read_field(j, "radius_full_backprop", c.radius_full_backprop, code);
  validate(c);
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace svrlab
