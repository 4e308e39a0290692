#include "svrlab/radius.hpp"

#include "svrlab/kernels.hpp"

namespace svrlab {

std::string_view direction_name(Direction d) noexcept { return d == Direction::T2A ? "t2a" : "a2t"; }

Vec SimilarityVector::flat() const {
  Vec out;
  out.reserve(size());
  out.push_back(s_pos);
  out.insert(out.end(), s_negs.begin(), s_negs.end());
  return out;
}

SimilarityVector similarity_vector(const EmbeddingBatch& anchors, const EmbeddingBatch& gallery, std::size_t i,
                                   double tau) {
  SimilarityVector s;
  s.s_pos = kernels::dot(anchors.row(i), gallery.row(i)) / tau;
  s.s_negs.reserve(gallery.rows() - 1);
  for (std::size_t j = 0; j < gallery.rows(); ++j) {
    if (j != i) s.s_negs.push_back(kernels::dot(anchors.row(i), gallery.row(j)) / tau);
  }
  return s;
}

StaticRadius::StaticRadius(Direction dir, double init)
    : value(std::string("radius.") + std::string(direction_name(dir)), {1}), direction(dir) {
  value.value[0] = init;
}

MlpPredictor::MlpPredictor(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2)
    : direction_(dir),
      net_(std::string("predictor.") + std::string(direction_name(dir)), {batch_size, h1, h2, 1}) {}

MlpPredictor MlpPredictor::seeded(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2,
                                  std::mt19937_64& rng, double output_bias) {
  MlpPredictor p(dir, batch_size, h1, h2);
  p.net_.init_uniform(rng, &output_bias);
  return p;
}

double MlpPredictor::predict_cached(const SimilarityVector& s) {
  Mlp::Cache c = net_.forward(s.flat());
  const double r = c.output[0];
  cached_.emplace_back(s, std::move(c));
  return r;
}

double MlpPredictor::predict(const SimilarityVector& s) const { return net_.forward(s.flat()).output[0]; }

const Mlp::Cache* MlpPredictor::find_cache(const SimilarityVector& s) const {
  for (const auto& [key, cache] : cached_) {
    if (key == s) return &cache;
  }
  return nullptr;
}

double predict_radius(MlpPredictor& predictor, const SimilarityVector& s) { return predictor.predict_cached(s); }

void predictor_backward(MlpPredictor& predictor, const SimilarityVector& s, double upstream_dR) {
  const Mlp::Cache* cache = predictor.find_cache(s);
  if (cache == nullptr) throw Error(Errc::StaleCache, "no cached forward pass for this similarity vector");
  const Vec up{upstream_dR};
  predictor.net().backward(*cache, up);
}

RadiusModel RadiusModel::make_static(Direction dir, double init) {
  RadiusModel m;
  m.mode_ = RadiusMode::Static;
  m.direction_ = dir;
  m.static_.emplace(dir, init);
  return m;
}

RadiusModel RadiusModel::make_dynamic(Direction dir, std::size_t batch_size, std::size_t h1, std::size_t h2,
                                      std::mt19937_64& rng) {
  RadiusModel m;
  m.mode_ = RadiusMode::Dynamic;
  m.direction_ = dir;
  m.predictor_.emplace(MlpPredictor::seeded(dir, batch_size, h1, h2, rng));
  return m;
}

Vec RadiusModel::radius_for_anchors(const EmbeddingBatch& texts, const EmbeddingBatch& audios, double tau) {
  const std::size_t b = texts.rows();
  if (mode_ == RadiusMode::Static) {
    last_s_.clear();
    last_count_ = b;
    return Vec(b, static_->get());
  }
  const EmbeddingBatch& anchors = direction_ == Direction::T2A ? texts : audios;
  const EmbeddingBatch& gallery = direction_ == Direction::T2A ? audios : texts;
  std::vector<SimilarityVector> s(b);
  for (std::size_t i = 0; i < b; ++i) s[i] = similarity_vector(anchors, gallery, i, tau);
  return radius_for_similarities(s);
}

Vec RadiusModel::radius_for_similarities(const std::vector<SimilarityVector>& s) {
  last_count_ = s.size();
  if (mode_ == RadiusMode::Static) {
    last_s_.clear();
    return Vec(s.size(), static_->get());
  }
  last_s_ = s;
  predictor_->clear_cache();
  Vec out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = predictor_->predict_cached(s[i]);
  return out;
}

std::vector<Vec> RadiusModel::backward(std::span<const double> grad_radii, bool want_input_grad) {
  if (grad_radii.size() != last_count_) throw Error(Errc::StaleCache, "radius gradients do not match last batch");
  std::vector<Vec> input_grads;
  if (mode_ == RadiusMode::Static) {
    double acc = 0.0;
    for (double g : grad_radii) acc += g;
    static_->value.grad[0] += acc;
    return input_grads;
  }
  for (std::size_t i = 0; i < grad_radii.size(); ++i) {
    if (!want_input_grad) {
      predictor_backward(*predictor_, last_s_[i], grad_radii[i]);
      continue;
    }
    const Mlp::Cache* cache = predictor_->find_cache(last_s_[i]);
    if (cache == nullptr) throw Error(Errc::StaleCache, "no cached forward pass for this similarity vector");
    input_grads.push_back(predictor_->net().backward(*cache, Vec{grad_radii[i]}));
  }
  return input_grads;
}

std::vector<Param*> RadiusModel::params() {
  if (mode_ == RadiusMode::Static) return {&static_->value};
  return predictor_->net().params();
}

std::vector<const Param*> RadiusModel::params() const {
  if (mode_ == RadiusMode::Static) return {&static_->value};
  return static_cast<const Mlp&>(predictor_->net()).params();
}

}  // namespace svrlab
