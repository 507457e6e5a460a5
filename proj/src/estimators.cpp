#include "unrollrisk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "unrollrisk/transfer.hpp"

namespace unrollrisk {

Regularizer::Regularizer(Matrix r) : r_(std::move(r)) {
  if (r_.rows() < 1 || r_.cols() < 1) throw std::invalid_argument("regularizer: empty matrix");
  if (r_.rows() > r_.cols())
    throw std::invalid_argument("regularizer: k = " + std::to_string(r_.rows()) + " exceeds n = " +
                                std::to_string(r_.cols()));
  if (!r_.allFinite()) throw std::invalid_argument("regularizer: non-finite entry");
}

Regularizer Regularizer::zero(int k, int n) { return Regularizer(Matrix::Zero(k, n)); }

double softplus(double raw) {
  // log1p(exp(x)) without overflow
  return raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
}

double softplus_inverse(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("softplus_inverse: omega must be > 0");
  return omega > 30.0 ? omega + std::log1p(-std::exp(-omega)) : std::log(std::expm1(omega));
}

UnrollConfig UnrollConfig::fixed(int depth, double omega) {
  UnrollConfig cfg{depth, omega, std::nullopt};
  cfg.validate();
  return cfg;
}

UnrollConfig UnrollConfig::learned(int depth, double omega_raw) {
  UnrollConfig cfg{depth, softplus(omega_raw), omega_raw};
  cfg.validate();
  return cfg;
}

void UnrollConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("unroll: depth must be >= 1");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("unroll: omega must be > 0");
  if (omega_raw && omega != softplus(*omega_raw))
    throw std::invalid_argument("unroll: omega does not match softplus(omega_raw)");
}

LinearEstimator::LinearEstimator(Matrix t) : t_(std::move(t)) {
  if (t_.rows() != t_.cols() || t_.rows() < 1) throw std::invalid_argument("estimator: matrix must be square");
}

LinearEstimator::LinearEstimator(Matrix t, SpectralDecomposition spectral)
    : LinearEstimator(std::move(t)) {
  if (spectral.eigenvalues.size() != t_.rows()) throw std::invalid_argument("estimator: spectrum size mismatch");
  spectral_ = std::move(spectral);
}

SpectralDecomposition LinearEstimator::spectral() const {
  if (spectral_) return *spectral_;
  return sym_eig(t_);
}

namespace {

void check_dims(const Regularizer& reg, const Vector& x) {
  if (x.size() != reg.n())
    throw std::invalid_argument("dimension mismatch: x has " + std::to_string(x.size()) +
                                " entries, regularizer has n = " + std::to_string(reg.n()));
}

// Builds V diag(g(s)) Vᵀ from the Gram spectrum, with the cached spectrum sorted descending.
LinearEstimator spectral_map(const SpectralDecomposition& gram, auto&& g) {
  const Eigen::Index n = gram.eigenvalues.size();
  Vector values(n);
  for (Eigen::Index j = 0; j < n; ++j) values(j) = g(std::max(0.0, gram.eigenvalues(j)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  SpectralDecomposition sd{Matrix(n, n), Vector(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    sd.eigenvalues(j) = values(order[static_cast<std::size_t>(j)]);
    sd.eigenvectors.col(j) = gram.eigenvectors.col(order[static_cast<std::size_t>(j)]);
  }
  Matrix t = sd.reconstruct();
  t = 0.5 * (t + t.transpose()).eval();
  return LinearEstimator(std::move(t), std::move(sd));
}

}  // namespace

Vector solve_lower_level(const Regularizer& reg, const Vector& x) {
  check_dims(reg, x);
  Matrix a = reg.gram();
  a.diagonal().array() += 1.0;
  return a.llt().solve(x);
}

Vector unroll_gd_iterative(const Regularizer& reg, const UnrollConfig& cfg, const Vector& x) {
  check_dims(reg, x);
  cfg.validate();
  const Matrix& r = reg.matrix();
  Vector z = Vector::Zero(x.size());
  for (int i = 0; i < cfg.depth; ++i) z -= cfg.omega * ((z - x) + r.transpose() * (r * z));
  return z;
}

LinearEstimator unroll_estimator(const Regularizer& reg, const UnrollConfig& cfg) {
  cfg.validate();
  const SpectralDecomposition gram = gram_eig(reg.matrix());
  return spectral_map(gram, [&](double s) { return transfer_f(s, cfg.depth, cfg.omega); });
}

LinearEstimator bilevel_estimator(const Regularizer& reg) {
  // (I + RᵀR)⁻¹ through the SVD of R; a Cholesky solve loses the unit
  // eigenvalues once ‖R‖² approaches 1/eps
  return spectral_map(gram_eig(reg.matrix()), [](double s) { return 1.0 / (1.0 + s); });
}

}  // namespace unrollrisk
