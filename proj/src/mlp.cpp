#include "svrlab/mlp.hpp"

#include <cmath>

#include "svrlab/kernels.hpp"

namespace svrlab {

Mlp::Mlp(std::string name, std::vector<std::size_t> widths) : name_(std::move(name)), widths_(std::move(widths)) {
  if (widths_.size() < 2) throw Error(Errc::InvalidConfig, "mlp needs at least one layer");
  for (std::size_t w : widths_) {
    if (w == 0) throw Error(Errc::InvalidConfig, "mlp layer width must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.emplace_back(name_ + ".w" + std::to_string(l), std::vector<std::size_t>{widths_[l + 1], widths_[l]});
    biases_.emplace_back(name_ + ".b" + std::to_string(l), std::vector<std::size_t>{widths_[l + 1]});
  }
}

void Mlp::init_uniform(std::mt19937_64& rng, const double* output_bias) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : weights_[l].value) v = dist(rng);
    for (double& v : biases_[l].value) v = dist(rng);
  }
  if (output_bias != nullptr) {
    for (double& v : biases_.back().value) v = *output_bias;
  }
}

Mlp::Cache Mlp::forward(VecView x) const {
  if (x.size() != input_width()) {
    throw Error(Errc::WidthMismatch, name_ + ": input width " + std::to_string(x.size()) + ", expected " +
                                         std::to_string(input_width()));
  }
  Cache c;
  Vec h(x.begin(), x.end());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Vec z(widths_[l + 1]);
    kernels::matvec(weights_[l].value, widths_[l + 1], widths_[l], h, biases_[l].value, z);
    c.inputs.push_back(std::move(h));
    h = z;
    if (l + 1 < weights_.size()) {
      for (double& v : h) v = std::tanh(v);
    }
    c.pre.push_back(std::move(z));
  }
  c.output = std::move(h);
  return c;
}

Vec Mlp::backward(const Cache& cache, VecView upstream) {
  if (cache.pre.size() != weights_.size() || upstream.size() != output_width()) {
    throw Error(Errc::StaleCache, name_ + ": cache does not match this network");
  }
  Vec g(upstream.begin(), upstream.end());
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) {
      // through tanh: d tanh(z) = 1 - tanh(z)^2
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = std::tanh(cache.pre[l][i]);
        g[i] *= 1.0 - t * t;
      }
    }
    kernels::rank1_accumulate(g, cache.inputs[l], weights_[l].grad);
    kernels::axpy(1.0, g, biases_[l].grad);
    Vec gin(widths_[l], 0.0);
    kernels::matvec_t_accumulate(weights_[l].value, widths_[l + 1], widths_[l], g, gin);
    g = std::move(gin);
  }
  return g;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Param*> Mlp::params() const {
  std::vector<const Param*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

}  // namespace svrlab
