#include "unrollrisk/expressivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unrollrisk/numeric.hpp"

namespace unrollrisk {

namespace {

constexpr double kRMin = -50.0;
constexpr std::size_t kGridPoints = 10000;

bool near(double value, double target, double tol) { return std::abs(value - target) <= tol * std::max(1.0, std::abs(target)); }

void check_depth_omega(int depth, double omega) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("omega must lie in (0, 2)");
}

struct Screened {
  Vector eigenvalues;
  bool symmetric = true;
};

Screened screen(const Matrix& t, double tol) {
  if (t.rows() != t.cols()) throw std::invalid_argument("membership: matrix must be square");
  Screened out;
  out.symmetric = (t - t.transpose()).norm() <= tol * std::max(1.0, t.norm());
  out.eigenvalues = sym_eig(0.5 * (t + t.transpose())).eigenvalues;
  return out;
}

Screened screen(const LinearEstimator& t, double tol) {
  if (t.has_spectral()) {
    Screened out{t.spectral().eigenvalues, true};
    out.symmetric = (t.matrix() - t.matrix().transpose()).norm() <= tol * std::max(1.0, t.matrix().norm());
    return out;
  }
  return screen(t.matrix(), tol);
}

void check_k(int k, Eigen::Index n) {
  if (k < 1 || k > n) throw std::invalid_argument("membership: k must satisfy 1 <= k <= n");
}

MembershipVerdict bilevel_verdict(const Screened& s, int k, double tol) {
  check_k(k, s.eigenvalues.size());
  MembershipVerdict v{true, {}, tol};
  const auto n = s.eigenvalues.size();
  if (!s.symmetric) v.failures.emplace_back("symmetric");
  if (!(s.eigenvalues.minCoeff() > 0.0)) v.failures.emplace_back("positive-definite");
  if (s.eigenvalues.maxCoeff() > 1.0 + tol) v.failures.emplace_back("below-identity");
  const auto ones = std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(), [&](double l) { return near(l, 1.0, tol); });
  if (ones < n - k) v.failures.emplace_back("eigenvalue-one-multiplicity");
  v.member = v.failures.empty();
  return v;
}

MembershipVerdict unrolling_verdict(const Screened& s, int k, int depth, double omega, double tol) {
  check_k(k, s.eigenvalues.size());
  if (depth < 1) throw std::invalid_argument("membership: depth must be >= 1");
  MembershipVerdict v{true, {}, tol};
  const auto n = s.eigenvalues.size();
  const double r = rho(depth, omega);
  if (!s.symmetric) v.failures.emplace_back("symmetric");
  const auto at_rho = std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(), [&](double l) { return near(l, r, tol); });
  if (at_rho < n - k) v.failures.emplace_back("rho-multiplicity");
  // N = 1 maps every spectrum to ω, so both bounds apply
  if (depth % 2 == 0 || depth == 1) {
    if (s.eigenvalues.maxCoeff() > r + tol * std::max(1.0, std::abs(r))) v.failures.emplace_back("ceiling");
  }
  if (depth % 2 == 1) {
    const double c = c_constant(depth, omega).value;
    if (s.eigenvalues.minCoeff() < c - tol * std::max(1.0, std::abs(c))) v.failures.emplace_back("floor");
  }
  v.member = v.failures.empty();
  return v;
}

}  // namespace

HnBounds hn_bounds(int depth) {
  if (depth < 3 || depth % 2 == 0) throw std::invalid_argument("hn_bounds: depth must be odd and >= 3");
  const double n = depth;
  const double log_n = std::log(n);
  return {0.5 + 1.0 / (n + 1.0), 0.5 + (1.0 / n) * (1.0 + log_n / 2.0) / (2.0 - log_n / n)};
}

std::string_view to_string(CRegime regime) { return regime == CRegime::Bounds ? "bounds" : "else"; }

double regime_product(int depth, double omega) {
  return ((depth - 1) * omega + 1.0) * std::pow(1.0 - omega, depth - 1);
}

double transfer_minimum_numeric(int depth, double omega) {
  check_depth_omega(depth, omega);
  const double r_max = 1.0 - omega;
  auto h = [&](double r) { return omega * geometric_sum(r, depth); };
  ScalarMinimum best = grid_then_golden(h, kRMin, r_max, kGridPoints, 1e-12);
  const double at_zero_spectrum = h(r_max);
  return std::min(best.value, at_zero_spectrum);
}

CnBounds c_constant(int depth, double omega) {
  check_depth_omega(depth, omega);
  if (depth % 2 == 0) throw std::invalid_argument("c_constant: depth must be odd");
  CnBounds out;
  const double r = rho(depth, omega);
  out.numeric_minimum = transfer_minimum_numeric(depth, omega);
  if (depth == 1) {
    // f ≡ ω; 1 − (1−ω) can differ from ω in the last bit
    out.lower = out.upper = out.value = out.numeric_minimum = omega;
    out.branch = CRegime::Else;
    out.certified = true;
    return out;
  } else {
    const HnBounds hb = hn_bounds(depth);
    out.lower = omega * hb.lower;
    out.upper = omega * hb.upper;
  }
  if (regime_product(depth, omega) < 1.0) {
    out.branch = CRegime::Bounds;
    out.value = out.numeric_minimum;
    out.certified = out.lower <= out.value && out.value <= out.upper;
  } else {
    out.branch = CRegime::Else;
    out.value = r;
    out.certified = true;
  }
  return out;
}

MembershipVerdict membership_bilevel(const Matrix& t, int k, double tol) { return bilevel_verdict(screen(t, tol), k, tol); }
MembershipVerdict membership_bilevel(const LinearEstimator& t, int k, double tol) {
  return bilevel_verdict(screen(t, tol), k, tol);
}

MembershipVerdict membership_unrolling(const Matrix& t, int k, int depth, double omega, double tol) {
  return unrolling_verdict(screen(t, tol), k, depth, omega, tol);
}
MembershipVerdict membership_unrolling(const LinearEstimator& t, int k, int depth, double omega, double tol) {
  return unrolling_verdict(screen(t, tol), k, depth, omega, tol);
}

}  // namespace unrollrisk
