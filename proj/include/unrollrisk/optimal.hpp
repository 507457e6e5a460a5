#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/model.hpp"

namespace unrollrisk {

struct RiskConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  std::optional<double> rho;    // unrolling reports only
  std::optional<double> floor;  // c_{N,ω}; odd N only
  std::optional<double> c1_min, c2_min, c3_min;
  std::optional<double> c1_max, c2_max, c3_max;
};

RiskConstants shrinkage_constants(const ModelParams& params);

struct OptimalRiskReport {
  double risk = 0.0;
  bool attained = true;
  std::string branch;
  std::optional<LinearEstimator> estimator;
  std::optional<Matrix> regularizer;  // a k x n R realizing the estimator, when known in closed form
  RiskConstants constants;
};

void to_json(nlohmann::json& j, const OptimalRiskReport& report);

OptimalRiskReport best_linear(const ModelParams& params);

// Infimum over (I + RᵀR)⁻¹ with R of size k x n.
OptimalRiskReport bilevel_optimal(const ModelParams& params, int k);

// Minimum over N-step unrolled estimators with stepsize ω in (0, 2).
OptimalRiskReport unrolling_optimal(const ModelParams& params, int k, int depth, double omega);

enum class OmegaShape { PointPair, Interval, Point };
enum class OmegaMethod { ClosedForm, Numeric };
std::string_view to_string(OmegaShape shape);
std::string_view to_string(OmegaMethod method);

struct OptimalOmegaReport {
  OmegaShape shape = OmegaShape::Point;
  double lower = 0.0;  // PointPair: 1−β; Interval: left end; Point: the optimum
  double upper = 0.0;  // PointPair: 1+β; Interval: right end; Point: same as lower
  double risk = 0.0;
  OmegaMethod method = OmegaMethod::ClosedForm;
  std::string branch;
};

void to_json(nlohmann::json& j, const OptimalOmegaReport& report);

// Closed form for even depth; for odd depth, grid plus golden-section search of
// unrolling_optimal over ω in (1e-6, 2 − 1e-6).
OptimalOmegaReport optimal_omega(const ModelParams& params, int k, int depth);

struct LpVertex {
  int j_star = 0;  // 0-based; smallest index among minimizers of c
  Vector s_star;
};

// min Σ sⱼcⱼ subject to Σ sⱼ = ‖a‖², 0 ≤ sⱼ ≤ ‖a‖².
LpVertex lp_vertex_min(const Vector& a, const Vector& c);

// Risk of the scalar unrolled estimator f(r²) for each r (params.n must be 1).
std::vector<double> scalar_landscape(int depth, double omega, const ModelParams& params,
                                     std::span<const double> r_grid);

// Orthogonal symmetric matrix whose first column is 1/√n.
Matrix householder_frame(int n);

// H diag(along_ones, rest...) Hᵀ with H from householder_frame.
Matrix estimator_from_placement(double along_ones, const std::vector<double>& orthogonal);

}  // namespace unrollrisk
