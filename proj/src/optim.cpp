#include "svrlab/optim.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace svrlab {

void adam_step(VecSpan params, VecView grads, AdamState& state, const AdamHyper& hyper, std::size_t t) {
  const std::size_t n = params.size();
  if (grads.size() != n) throw Error(Errc::ShapeMismatch, "adam: gradient size differs from parameter size");
  if (t < 1) throw Error(Errc::InvalidConfig, "adam: step counter starts at 1");
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n) throw Error(Errc::ShapeMismatch, "adam: moment buffer size");

  const double td = static_cast<double>(t);
  const double bc1 = 1.0 - std::pow(hyper.beta1, td);
  const double bc2 = 1.0 - std::pow(hyper.beta2, td);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

Param::Param(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  const std::size_t count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

}  // namespace svrlab
