#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/transfer.hpp"

namespace unrollrisk {

struct HnBounds {
  double lower = 0.0;  // a_N = ½ + 1/(N+1)
  double upper = 0.0;  // b_N = ½ + (1/N)(1 + ln N/2)/(2 − ln N/N)
};

// Odd N >= 3 only.
HnBounds hn_bounds(int depth);

enum class CRegime { Bounds, Else };
std::string_view to_string(CRegime regime);

struct CnBounds {
  double lower = 0.0;  // ω·a_N (ω when N = 1)
  double upper = 0.0;  // ω·b_N (ω when N = 1)
  CRegime branch = CRegime::Else;
  double value = 0.0;            // min of the transfer map over s >= 0
  double numeric_minimum = 0.0;  // grid + golden estimate, reported in both regimes
  bool certified = false;        // Bounds regime: lower <= value <= upper
};

// ((N−1)ω + 1)(1−ω)^{N−1}; the transfer map has f'(0) = product − 1.
double regime_product(int depth, double omega);

// min over r in [−50, 1−ω] of ω·Σ_{j<N} rʲ (r = 1−ω(1+s)).
double transfer_minimum_numeric(int depth, double omega);

// Odd depth, ω in (0, 2). Bounds regime when the transfer map decreases at s = 0
// (regime_product < 1); otherwise the minimum is attained at s = 0 and equals rho.
CnBounds c_constant(int depth, double omega);

struct MembershipVerdict {
  bool member = true;
  std::vector<std::string> failures;
  double tolerance = 0.0;
};

// Failure names: "symmetric", "positive-definite", "below-identity", "eigenvalue-one-multiplicity".
MembershipVerdict membership_bilevel(const Matrix& t, int k, double tol = 1e-8);
MembershipVerdict membership_bilevel(const LinearEstimator& t, int k, double tol = 1e-8);

// Failure names: "symmetric", "rho-multiplicity", "ceiling" (even N and N = 1), "floor" (odd N).
MembershipVerdict membership_unrolling(const Matrix& t, int k, int depth, double omega, double tol = 1e-8);
MembershipVerdict membership_unrolling(const LinearEstimator& t, int k, int depth, double omega,
                                       double tol = 1e-8);

}  // namespace unrollrisk
