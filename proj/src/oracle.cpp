#include "unrollrisk/estimators.hpp"
#include "unrollrisk//oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "unrollrisk/risk.hpp"
#include "unrollrisk/rng.hpp"
#include "unrollrisk/unrolled_gradient.hpp"

namespace unrollrisk {

BfgsResult bfgs_minimize(const std::function<double(const Vector&, Vector&)>& f, Vector x0,
                         const BfgsOptions& options) {
  const Eigen::Index d = x0.size();
  BfgsResult out;
  out.x = std::move(x0);
  Vector g(d);
  out.value = f(out.x, g);
  Matrix h = Matrix::Identity(d, d);
  Vector g_new(d);
  int stalls = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Vector dir = -h * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    if (options.max_relative_step > 0.0) {
      const double cap = options.max_relative_step * std::max(out.x.norm(), options.min_step_scale);
      const double len = dir.norm();
      if (len > cap) {
        dir *= cap / len;
        slope *= cap / len;
      }
    }
    double step = 1.0;
    Vector x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = out.x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= out.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h.isIdentity()) break;
      h.setIdentity();
      continue;
    }
    const Vector s = x_new - out.x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    const double decrease = out.value - f_new;
    out.x = std::move(x_new);
    out.value = f_new;
    g = g_new;
    if (sy > 1e-14 * s.norm() * y.norm() && sy > 0.0) {
      const double rho_k = 1.0 / sy;
      const Vector hy = h * y;
      h += (rho_k * rho_k * y.dot(hy) + rho_k) * (s * s.transpose()) - rho_k * (hy * s.transpose() + s * hy.transpose());
    } else {
      h.setIdentity();
    }
    stalls = decrease <= 1e-16 * std::max(1.0, std::abs(out.value)) ? stalls + 1 : 0;
    if (stalls >= 20) break;
  }
  return out;
}

namespace {

Matrix as_matrix(const Vector& x, int k, int n) { return Eigen::Map<const Matrix>(x.data(), k, n); }

Vector as_vector(const Matrix& r) { return Eigen::Map<const Vector>(r.data(), r.size()); }

constexpr int kHopCandidates = 3;
constexpr std::array<double, 6> kHopFactors{0.1, 0.3, 0.6, 1.6, 3.0, 10.0};

OracleResult multistart(int k, int n, int restarts, std::uint64_t seed,
                        const std::function<double(const Matrix&, Matrix&)>& risk_and_grad) {
  if (restarts < 1) throw std::invalid_argument("oracle: restarts must be >= 1");
  BfgsOptions options;
  options.max_relative_step = 0.25;
  auto objective = [&](const Vector& x, Vector& grad) {
    Matrix d_r;
    const double v = risk_and_grad(as_matrix(x, k, n), d_r);
    grad = as_vector(d_r);
    return v;
  };
  std::vector<BfgsResult> minima;
  OracleResult best;
  for (int s = 0; s < restarts; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    // scales spread log-uniformly over [0.05, 5] so both small and large spectra are explored
    const double scale = 0.05 * std::pow(100.0, rng.uniform(0.0, 1.0));
    Vector x0(k * n);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = scale * rng.normal();
    minima.push_back(bfgs_minimize(objective, x0, options));
    best.restart_values.push_back(minima.back().value);
  }
  std::sort(minima.begin(), minima.end(), [](const BfgsResult& a, const BfgsResult& b) { return a.value < b.value; });
  minima.resize(std::min<std::size_t>(minima.size(), kHopCandidates));

  for (BfgsResult& current : minima) {
    bool improved = true;
    for (int round = 0; improved && round < 20; ++round) {
      improved = false;
      const Eigen::JacobiSVD<Matrix> svd(as_matrix(current.x, k, n), Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector sv = svd.singularValues();
      for (Eigen::Index j = 0; j < sv.size() && !improved; ++j) {
        for (double factor : kHopFactors) {
          Vector scaled = sv;
          // a vanishing singular value is reseeded at unit size before scaling
          scaled(j) = (sv(j) > 1e-8 ? sv(j) : 1.0) * factor;
          const Matrix r0 = svd.matrixU() * scaled.asDiagonal() * svd.matrixV().transpose();
          BfgsResult trial = bfgs_minimize(objective, as_vector(r0), options);
          if (trial.value < current.value - 1e-13 * std::max(1.0, std::abs(current.value))) {
            current = std::move(trial);
            improved = true;
            break;
          }
        }
      }
    }
  }
  const auto winner = std::min_element(minima.begin(), minima.end(),
                                       [](const BfgsResult& a, const BfgsResult& b) { return a.value < b.value; });
  best.value = winner->value;
  best.r = as_matrix(winner->x, k, n);
  return best;
}

}  // namespace

OracleResult minimize_unrolling_risk(const ModelParams& params, int k, int depth, double omega, int restarts,
                                     std::uint64_t seed) {
  params.validate();
  return multistart(k, params.n, restarts, seed, [&](const Matrix& r, Matrix& d_r) {
    const Matrix t = unrolled_operator(r, omega, depth);
    const double v = true_risk(t, params).value;
    if (!std::isfinite(v)) {
      d_r = Matrix::Zero(r.rows(), r.cols());
      return v;
    }
    OperatorGradient g = unrolled_operator_vjp(r, omega, depth, true_risk_gradient(t, params));
    d_r = std::move(g.d_r);
    return v;
  });
}

OracleResult minimize_bilevel_risk(const ModelParams& params, int k, int restarts, std::uint64_t seed) {
  params.validate();
  return multistart(k, params.n, restarts, seed, [&](const Matrix& r, Matrix& d_r) {
    const Matrix t = bilevel_estimator(Regularizer(r)).matrix();
    BilevelGradient g = bilevel_operator_vjp(r, true_risk_gradient(t, params));
    d_r = std::move(g.d_r);
    return true_risk(t, params).value;
  });
}

}  // namespace unrollrisk
