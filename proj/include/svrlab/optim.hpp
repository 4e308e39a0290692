#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "svrlab/core_math.hpp"

namespace svrlab {

struct AdamState {
  Vec m;
  Vec v;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update of `params` in place; `t` is the 1-based step.
void adam_step(VecSpan params, VecView grads, AdamState& state, const AdamHyper& hyper, std::size_t t);

// A named trainable tensor with its gradient accumulator and Adam moments.
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  Vec value;
  Vec grad;
  AdamState adam;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> s);

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();
  void step(const AdamHyper& hyper, std::size_t t) { adam_step(value, grad, adam, hyper, t); }
};

}  // namespace svrlab
