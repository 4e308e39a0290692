#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "svrlab/config.hpp"
#include "svrlab/core_math.hpp"

namespace svrlab {

// Analytic gradients compared against central differences.
struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t trials = 0;
  bool passed = false;
};

inline constexpr double kFiniteDifferenceStep = 1e-6;
// Single loss terms and predictors, and the full encoder chain.
inline constexpr double kComponentTolerance = 1e-5;
inline constexpr double kEndToEndTolerance = 1e-4;

// ||a - n|| / max(||a||, ||n||, 1e-8)
double relative_error(VecView analytic, VecView numeric);

// Central-difference gradient of f at x (x is restored afterwards).
Vec numeric_gradient(const std::function<double()>& f, VecSpan x, double h = kFiniteDifferenceStep);

// Batch loss terms w.r.t. raw (pre-normalization) embeddings and radii.
std::vector<CheckResult> gradcheck_losses(std::uint64_t seed, std::size_t trials = 4);
// Predictor parameters and similarity inputs.
std::vector<CheckResult> gradcheck_radius(std::uint64_t seed, std::size_t trials = 4);
// End-to-end through both encoders for one configuration.
CheckResult gradcheck_model(const TrainConfig& cfg, const std::string& name, std::uint64_t seed,
                            std::size_t trials = 2);
// gradcheck_model over every base loss / variant / flag combination.
std::vector<CheckResult> gradcheck_trainer(std::uint64_t seed, std::size_t trials = 2);

}  // namespace svrlab
