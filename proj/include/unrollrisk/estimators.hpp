#pragma once

#include <optional>

#include "unrollrisk/spectral.hpp"
#include "unrollrisk/types.hpp"

namespace unrollrisk {

// k x n regularizer matrix with 1 <= k <= n.
class Regularizer {
 public:
  explicit Regularizer(Matrix r);
  static Regularizer zero(int k, int n);

  int k() const { return static_cast<int>(r_.rows()); }
  int n() const { return static_cast<int>(r_.cols()); }
  const Matrix& matrix() const { return r_; }
  Matrix gram() const { return r_.transpose() * r_; }

 private:
  Matrix r_;
};

double softplus(double raw);
double softplus_inverse(double omega);

struct UnrollConfig {
  int depth = 1;
  double omega = 1.0;
  std::optional<double> omega_raw;  // when set, omega == softplus(*omega_raw)

  static UnrollConfig fixed(int depth, double omega);
  static UnrollConfig learned(int depth, double omega_raw);
  void validate() const;
};

// Dense n x n linear map with an optional precomputed eigendecomposition.
class LinearEstimator {
 public:
  explicit LinearEstimator(Matrix t);
  LinearEstimator(Matrix t, SpectralDecomposition spectral);

  const Matrix& matrix() const { return t_; }
  int dim() const { return static_cast<int>(t_.rows()); }
  bool has_spectral() const { return spectral_.has_value(); }
  // Cached decomposition if present, otherwise computed on the fly (t must be symmetric).
  SpectralDecomposition spectral() const;

 private:
  Matrix t_;
  std::optional<SpectralDecomposition> spectral_;
};

// Exact minimizer of ½‖z−x‖² + ½‖Rz‖².
Vector solve_lower_level(const Regularizer& reg, const Vector& x);

// N literal gradient steps z ← z − ω((z−x) + RᵀRz) from z = 0.
Vector unroll_gd_iterative(const Regularizer& reg, const UnrollConfig& cfg, const Vector& x);

// Closed form of the N-step map via the eigendecomposition of RᵀR.
LinearEstimator unroll_estimator(const Regularizer& reg, const UnrollConfig& cfg);

// (I + RᵀR)⁻¹.
LinearEstimator bilevel_estimator(const Regularizer& reg);

}  // namespace unrollrisk
