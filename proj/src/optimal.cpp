#include "unrollrisk/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "unrollrisk/expressivity.hpp"
#include "unrollrisk/numeric.hpp"
#include "unrollrisk/risk.hpp"

namespace unrollrisk {

namespace {

void check_k(const ModelParams& params, int k) {
  if (k < 1 || k > params.n)
    throw std::invalid_argument("k = " + std::to_string(k) + " outside [1, n = " + std::to_string(params.n) + "]");
}

void check_omega(double omega) {
  if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("omega must lie in (0, 2)");
}

std::string kind_prefix(const ModelParams& p) { return std::string(to_string(p.kind)); }

std::vector<double> fill(std::size_t count, double v) { return std::vector<double>(count, v); }

// Orthogonal-complement eigenvalues: `first` copies of a, then the remainder b.
std::vector<double> split(int n_minus_one, int first, double a, double b) {
  std::vector<double> out = fill(static_cast<std::size_t>(first), a);
  out.resize(static_cast<std::size_t>(n_minus_one), b);
  return out;
}

LinearEstimator placed(double along_ones, const std::vector<double>& orthogonal) {
  return LinearEstimator(estimator_from_placement(along_ones, orthogonal));
}

}  // namespace

RiskConstants shrinkage_constants(const ModelParams& params) {
  params.validate();
  const double n = params.n;
  const double mu2 = params.mu * params.mu;
  const double signal = n * (mu2 + params.theta2);
  RiskConstants c;
  c.c1 = signal / (signal + params.sigma2);
  c.c2 = (n * mu2 + params.theta2) / (n * mu2 + params.theta2 + params.sigma2);
  c.c3 = params.theta2 / (params.theta2 + params.sigma2);
  return c;
}

void to_json(nlohmann::json& j, const OptimalRiskReport& report) {
  nlohmann::json constants{{"C1", report.constants.c1}, {"C2", report.constants.c2}, {"C3", report.constants.c3}};
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) constants[key] = *v;
  };
  put("rho", report.constants.rho);
  put("c", report.constants.floor);
  put("C1_min", report.constants.c1_min);
  put("C2_min", report.constants.c2_min);
  put("C3_min", report.constants.c3_min);
  put("C1_max", report.constants.c1_max);
  put("C2_max", report.constants.c2_max);
  put("C3_max", report.constants.c3_max);
  j = nlohmann::json{{"risk", report.risk},
                     {"attained", report.attained},
                     {"branch", report.branch},
                     {"constants", constants}};
}

OptimalRiskReport best_linear(const ModelParams& params) {
  const RiskConstants c = shrinkage_constants(params);
  const int n = params.n;
  const double mu2 = params.mu * params.mu;
  const double s2 = params.sigma2;
  const Matrix ones = Matrix::Ones(n, n);
  OptimalRiskReport out;
  out.constants = c;
  out.branch = kind_prefix(params) + "/linear";
  if (params.kind == DataModel::RandomConstant) {
    const double a = mu2 + params.theta2;
    out.estimator = LinearEstimator(a / (n * a + s2) * ones);
    out.risk = 0.5 * s2 * c.c1;
  } else {
    const double t2 = params.theta2;
    Matrix t = c.c3 * Matrix::Identity(n, n) + (s2 / (t2 + s2)) * (mu2 / (n * mu2 + t2 + s2)) * ones;
    out.estimator = LinearEstimator(std::move(t));
    out.risk = 0.5 * (n * mu2 + t2) * s2 / (n * mu2 + t2 + s2) + 0.5 * (n - 1) * t2 * s2 / (t2 + s2);
  }
  return out;
}

OptimalRiskReport bilevel_optimal(const ModelParams& params, int k) {
  check_k(params, k);
  const RiskConstants c = shrinkage_constants(params);
  const int n = params.n;
  const double s2 = params.sigma2;
  OptimalRiskReport out;
  out.constants = c;
  const std::string kn = k < n ? "k<n" : "k=n";
  out.branch = kind_prefix(params) + "/bilevel/" + kn;
  if (params.kind == DataModel::RandomConstant) {
    out.risk = k < n ? 0.5 * s2 * (n - k) : 0.5 * s2 * c.c1;
    // the optimal map is rank one; (I + RᵀR)⁻¹ is full rank, so only n = 1 reaches it
    out.attained = n == 1 && c.c1 > 0.0;
    if (out.attained) {
      out.estimator = LinearEstimator(Matrix::Constant(1, 1, c.c1));
      out.regularizer = Matrix::Constant(1, 1, std::sqrt(1.0 / c.c1 - 1.0));
    }
    return out;
  }
  // iid: eigenvalue C3 on k directions orthogonal to 1 (k−1 of them plus 1/√n when k = n)
  double along_ones = 1.0;
  std::vector<double> orthogonal;
  if (k < n) {
    out.risk = 0.5 * s2 * (k * c.c3 + (n - k));
    orthogonal = split(n - 1, k, c.c3, 1.0);
  } else {
    out.risk = 0.5 * s2 * ((n - 1) * c.c3 + c.c2);
    along_ones = c.c2;
    orthogonal = fill(static_cast<std::size_t>(n - 1), c.c3);
  }
  const double smallest = std::min(along_ones, orthogonal.empty() ? along_ones : *std::min_element(orthogonal.begin(), orthogonal.end()));
  out.attained = smallest > 0.0;
  if (!out.attained) return out;
  out.estimator = placed(along_ones, orthogonal);
  // R = diag(√(1/λ − 1)) Vᵀ over the directions with λ < 1
  const Matrix frame = householder_frame(n);
  std::vector<double> values{along_ones};
  values.insert(values.end(), orthogonal.begin(), orthogonal.end());
  Matrix r = Matrix::Zero(k, n);
  int row = 0;
  for (int j = 0; j < n && row < k; ++j) {
    if (values[static_cast<std::size_t>(j)] < 1.0) {
      r.row(row++) = std::sqrt(1.0 / values[static_cast<std::size_t>(j)] - 1.0) * frame.col(j).transpose();
    }
  }
  out.regularizer = std::move(r);
  return out;
}

OptimalRiskReport unrolling_optimal(const ModelParams& params, int k, int depth, double omega) {
  check_k(params, k);
  check_omega(omega);
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  const int n = params.n;
  const double mu2 = params.mu * params.mu;
  const double t2 = params.theta2;
  const double s2 = params.sigma2;
  const double r = rho(depth, omega);
  OptimalRiskReport out;
  out.constants = shrinkage_constants(params);
  RiskConstants& c = out.constants;
  c.rho = r;
  const std::string kn = k < n ? "k<n" : "k=n";
  const std::string prefix = kind_prefix(params);

  if (depth == 1) {
    // every R gives ωI
    const Matrix t = omega * Matrix::Identity(n, n);
    out.risk = true_risk(t, params).value;
    out.branch = prefix + "/n1/identity-scaled";
    c.floor = omega;
    out.estimator = LinearEstimator(t);
    return out;
  }

  const int rest = n - 1;
  if (depth % 2 == 0) {
    c.c1_min = std::min(c.c1, r);
    c.c2_min = std::min(c.c2, r);
    c.c3_min = std::min(c.c3, r);
    const std::string tag = prefix + "/even/" + kn;
    if (params.kind == DataModel::RandomConstant) {
      const double a = mu2 + t2;
      if (k < n) {
        out.risk = 0.5 * a * n * (r - 1) * (r - 1) + 0.5 * s2 * (n - k) * r * r;
        out.branch = tag;
        out.estimator = placed(r, split(rest, k, 0.0, r));
      } else {
        const double m = *c.c1_min;
        out.risk = 0.5 * a * n * (m - 1) * (m - 1) + 0.5 * s2 * m * m;
        out.branch = tag + (c.c1 <= r ? "/C1min=C1" : "/C1min=rho");
        out.estimator = placed(m, fill(static_cast<std::size_t>(rest), 0.0));
      }
    } else {
      const double m3 = *c.c3_min;
      if (k < n) {
        const double common = 0.5 * mu2 * n * (r - 1) * (r - 1) + 0.5 * t2 * (k - 1) * (m3 - 1) * (m3 - 1) +
                              0.5 * t2 * (n - k) * (r - 1) * (r - 1) + 0.5 * s2 * (k - 1) * m3 * m3 +
                              0.5 * s2 * (n - k) * r * r;
        const double aligned_free = 0.5 * t2 * (r - 1) * (r - 1) + 0.5 * s2 * r * r;
        const double aligned_fixed = 0.5 * t2 * (m3 - 1) * (m3 - 1) + 0.5 * s2 * m3 * m3;
        if (aligned_free <= aligned_fixed) {
          out.risk = common + aligned_free;
          out.branch = tag + "/inner=rho";
          out.estimator = placed(r, split(rest, k - 1, m3, r));
        } else {
          out.risk = common + aligned_fixed;
          out.branch = tag + "/inner=C3min";
          out.estimator = placed(r, split(rest, k, m3, r));
        }
      } else {
        const double m2 = *c.c2_min;
        out.risk = 0.5 * mu2 * n * (m2 - 1) * (m2 - 1) + 0.5 * t2 * (m2 - 1) * (m2 - 1) +
                   0.5 * t2 * (n - 1) * (m3 - 1) * (m3 - 1) + 0.5 * s2 * m2 * m2 + 0.5 * s2 * (n - 1) * m3 * m3;
        out.branch = tag + (c.c2 <= r ? "/C2min=C2" : "/C2min=rho");
        out.estimator = placed(m2, fill(static_cast<std::size_t>(rest), m3));
      }
    }
    return out;
  }

  const double fl = c_constant(depth, omega).value;
  c.floor = fl;
  c.c1_max = std::max(c.c1, fl);
  c.c2_max = std::max(c.c2, fl);
  c.c3_max = std::max(c.c3, fl);
  const std::string tag = prefix + "/odd/" + kn;
  if (params.kind == DataModel::RandomConstant) {
    const double a = mu2 + t2;
    const double m1 = *c.c1_max;
    const std::string which = c.c1 >= fl ? "C1max=C1" : "C1max=c";
    if (k < n) {
      const double common = 0.5 * s2 * ((k - 1) * fl * fl + (n - k) * r * r);
      const double aligned_free = 0.5 * a * n * (m1 - 1) * (m1 - 1) + 0.5 * s2 * m1 * m1;
      const double aligned_fixed = 0.5 * a * n * (r - 1) * (r - 1) + 0.5 * s2 * fl * fl;
      if (aligned_free <= aligned_fixed) {
        out.risk = common + aligned_free;
        out.branch = tag + "/inner=free/" + which;
        out.estimator = placed(m1, split(rest, k - 1, fl, r));
      } else {
        out.risk = common + aligned_fixed;
        out.branch = tag + "/inner=fixed/" + which;
        out.estimator = placed(r, split(rest, k, fl, r));
      }
    } else {
      out.risk = 0.5 * a * n * (m1 - 1) * (m1 - 1) + 0.5 * s2 * m1 * m1 + 0.5 * s2 * (n - 1) * fl * fl;
      out.branch = tag + "/" + which;
      out.estimator = placed(m1, fill(static_cast<std::size_t>(rest), fl));
    }
    return out;
  }
  const double m2 = *c.c2_max;
  const double m3 = *c.c3_max;
  if (k < n) {
    const double common = 0.5 * t2 * (k - 1) * (m3 - 1) * (m3 - 1) + 0.5 * t2 * (n - k) * (r - 1) * (r - 1) +
                          0.5 * s2 * (k - 1) * m3 * m3 + 0.5 * s2 * (n - k) * r * r;
    const double aligned_free =
        0.5 * mu2 * n * (m2 - 1) * (m2 - 1) + 0.5 * s2 * m2 * m2 + 0.5 * t2 * (m2 - 1) * (m2 - 1);
    const double aligned_fixed =
        0.5 * mu2 * n * (r - 1) * (r - 1) + 0.5 * s2 * m3 * m3 + 0.5 * t2 * (m3 - 1) * (m3 - 1);
    if (aligned_free <= aligned_fixed) {
      out.risk = common + aligned_free;
      out.branch = tag + "/inner=free";
      out.estimator = placed(m2, split(rest, k - 1, m3, r));
    } else {
      out.risk = common + aligned_fixed;
      out.branch = tag + "/inner=fixed";
      out.estimator = placed(r, split(rest, k, m3, r));
    }
  } else {
    out.risk = 0.5 * mu2 * n * (m2 - 1) * (m2 - 1) + 0.5 * t2 * (m2 - 1) * (m2 - 1) +
               0.5 * t2 * (n - 1) * (m3 - 1) * (m3 - 1) + 0.5 * s2 * m2 * m2 + 0.5 * s2 * (n - 1) * m3 * m3;
    out.branch = tag;
    out.estimator = placed(m2, fill(static_cast<std::size_t>(rest), m3));
  }
  return out;
}

std::string_view to_string(OmegaShape shape) {
  switch (shape) {
    case OmegaShape::PointPair: return "point-pair";
    case OmegaShape::Interval: return "interval";
    case OmegaShape::Point: return "point";
  }
  return "?";
}

std::string_view to_string(OmegaMethod method) { return method == OmegaMethod::ClosedForm ? "closed-form" : "numeric"; }

void to_json(nlohmann::json& j, const OptimalOmegaReport& report) {
  j = nlohmann::json{{"shape", std::string(to_string(report.shape))},
                     {"lower", report.lower},
                     {"upper", report.upper},
                     {"risk", report.risk},
                     {"method", std::string(to_string(report.method))},
                     {"branch", report.branch}};
}

OptimalOmegaReport optimal_omega(const ModelParams& params, int k, int depth) {
  check_k(params, k);
  params.validate();
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  OptimalOmegaReport out;
  const double n = params.n;
  const double mu2 = params.mu * params.mu;
  const double t2 = params.theta2;
  const double s2 = params.sigma2;
  const std::string prefix = kind_prefix(params);
  if (depth % 2 == 0) {
    out.method = OmegaMethod::ClosedForm;
    const double root = 1.0 / depth;
    if (params.kind == DataModel::RandomConstant) {
      const double a = n * (mu2 + t2);
      if (k < params.n) {
        const double m = n - k;
        const double beta = std::pow(s2 * m / (a + s2 * m), root);
        out.shape = OmegaShape::PointPair;
        out.lower = 1.0 - beta;
        out.upper = 1.0 + beta;
        out.risk = 0.5 * a * m * s2 / (a + m * s2);
        out.branch = prefix + "/even/k<n";
      } else {
        const double beta = std::pow(s2 / (a + s2), root);
        out.shape = OmegaShape::Interval;
        out.lower = 1.0 - beta;
        out.upper = 1.0 + beta;
        out.risk = 0.5 * a * s2 / (a + s2);
        out.branch = prefix + "/even/k=n";
      }
    } else {
      if (k < params.n) {
        const double m = n - k;
        const double denom = mu2 * n + t2 * m + s2 * m;
        const double beta = std::pow(s2 * m / denom, root);
        out.shape = OmegaShape::PointPair;
        out.lower = 1.0 - beta;
        out.upper = 1.0 + beta;
        out.risk = 0.5 * k * t2 * s2 / (t2 + s2) + 0.5 * s2 * m * (mu2 * n + t2 * m) / denom;
        out.branch = prefix + "/even/k<n";
      } else {
        const double beta = std::pow(s2 / (mu2 * n + t2 + s2), root);
        out.shape = OmegaShape::Interval;
        out.lower = 1.0 - beta;
        out.upper = 1.0 + beta;
        out.risk = 0.5 * (n - 1) * s2 * t2 / (s2 + t2) + 0.5 * s2 * (mu2 * n + t2) / (mu2 * n + t2 + s2);
        out.branch = prefix + "/even/k=n";
      }
    }
    return out;
  }
  constexpr double eps = 1e-6;
  auto risk_at = [&](double w) { return unrolling_optimal(params, k, depth, w).risk; };
  const ScalarMinimum best = grid_then_golden(risk_at, eps, 2.0 - eps, 401, 1e-10);
  out.method = OmegaMethod::Numeric;
  out.shape = OmegaShape::Point;
  out.lower = out.upper = best.x;
  out.risk = best.value;
  out.branch = prefix + (depth == 1 ? "/n1" : "/odd") + (k < params.n ? "/k<n" : "/k=n");
  return out;
}

LpVertex lp_vertex_min(const Vector& a, const Vector& c) {
  if (c.size() == 0) throw std::invalid_argument("lp_vertex_min: empty cost vector");
  if (a.size() != c.size()) throw std::invalid_argument("lp_vertex_min: size mismatch");
  if ((c.array() < 0.0).any()) throw std::invalid_argument("lp_vertex_min: costs must be nonnegative");
  Eigen::Index j = 0;
  for (Eigen::Index i = 1; i < c.size(); ++i)
    if (c(i) < c(j)) j = i;
  LpVertex out;
  out.j_star = static_cast<int>(j);
  out.s_star = Vector::Zero(c.size());
  out.s_star(j) = a.squaredNorm();
  return out;
}

std::vector<double> scalar_landscape(int depth, double omega, const ModelParams& params,
                                     std::span<const double> r_grid) {
  if (params.n != 1) throw std::invalid_argument("scalar_landscape: requires n = 1");
  params.validate();
  std::vector<double> out;
  out.reserve(r_grid.size());
  Matrix t(1, 1);
  for (double r : r_grid) {
    t(0, 0) = transfer_f(r * r, depth, omega);
    out.push_back(true_risk(t, params).value);
  }
  return out;
}

Matrix householder_frame(int n) {
  if (n < 1) throw std::invalid_argument("householder_frame: n must be >= 1");
  Vector u = Vector::Constant(n, -1.0 / std::sqrt(static_cast<double>(n)));
  u(0) += 1.0;
  const double norm2 = u.squaredNorm();
  Matrix h = Matrix::Identity(n, n);
  if (norm2 > 0.0) h -= (2.0 / norm2) * u * u.transpose();
  return h;
}

Matrix estimator_from_placement(double along_ones, const std::vector<double>& orthogonal) {
  const int n = static_cast<int>(orthogonal.size()) + 1;
  const Matrix h = householder_frame(n);
  Vector values(n);
  values(0) = along_ones;
  for (int j = 1; j < n; ++j) values(j) = orthogonal[static_cast<std::size_t>(j - 1)];
  Matrix t = h * values.asDiagonal() * h.transpose();
  return 0.5 * (t + t.transpose());
}

}  // namespace unrollrisk
