#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "svrlab/core_math.hpp"
#include "svrlab/optim.hpp"

namespace svrlab {

// Fully connected stack with tanh between layers and a linear output.
// Backprop is written out by hand; there is no graph.
class Mlp {
 public:
  struct Cache {
    std::vector<Vec> inputs;  // input to each layer
    std::vector<Vec> pre;     // pre-activation of each layer
    Vec output;
  };

  Mlp() = default;
  // widths = {in, h1, ..., out}
  Mlp(std::string name, std::vector<std::size_t> widths);

  // Uniform(+-1/sqrt(fan_in)) weights and biases; optional constant output bias.
  void init_uniform(std::mt19937_64& rng, const double* output_bias = nullptr);

  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t layers() const { return weights_.size(); }

  Cache forward(VecView x) const;
  Vec infer(VecView x) const { return forward(x).output; }

  // Accumulates parameter gradients for dL/d(output) = upstream and returns dL/d(input).
  Vec backward(const Cache& cache, VecView upstream);

  Param& weight(std::size_t l) { return weights_[l]; }
  Param& bias(std::size_t l) { return biases_[l]; }
  const Param& weight(std::size_t l) const { return weights_[l]; }
  const Param& bias(std::size_t l) const { return biases_[l]; }

  // Parameters in manifest order: w0, b0, w1, b1, ...
  std::vector<Param*> params();
  std::vector<const Param*> params() const;

 private:
  std::string name_;
  std::vector<std::size_t> widths_;
  std::vector<Param> weights_;
  std::vector<Param> biases_;
};

}  // namespace svrlab
