#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "unrollrisk/model.hpp"
#include "unrollrisk/types.hpp"

namespace unrollrisk {

struct BfgsOptions {
  int max_iterations = 3000;
  double gradient_tolerance = 1e-11;
  // When positive, each step is shortened to at most max_relative_step·max(‖x‖, min_step_scale).
  double max_relative_step = 0.0;
  double min_step_scale = 0.05;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// f(x, grad) returns the objective and writes the gradient. Backtracking
// Armijo line search; the inverse-Hessian estimate resets when curvature fails.
BfgsResult bfgs_minimize(const std::function<double(const Vector&, Vector&)>& f, Vector x0,
                         const BfgsOptions& options = {});

struct OracleResult {
  double value = 0.0;  // best risk over restarts
  Matrix r;            // regularizer attaining it
  std::vector<double> restart_values;
};

// Multistart search over k x n regularizers of the closed-form risk of the
// N-step unrolled estimator (analytic gradients through the unrolled recursion).
// Random starts are followed by basin hopping on the best local minima: one
// singular value of R at a time is rescaled and the result re-optimized.
OracleResult minimize_unrolling_risk(const ModelParams& params, int k, int depth, double omega, int restarts,
                                     std::uint64_t seed);

// Same over bilevel estimators (I + RᵀR)⁻¹.
OracleResult minimize_bilevel_risk(const ModelParams& params, int k, int restarts, std::uint64_t seed);

}  // namespace unrollrisk
