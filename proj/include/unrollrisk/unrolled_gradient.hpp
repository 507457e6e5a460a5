#pragma once

#include "unrollrisk/types.hpp"

namespace unrollrisk {

// Matrix form of the N-step recursion Z ← ((1−ω)I − ωRᵀR)Z + ωI from Z = 0.
Matrix unrolled_operator(const Matrix& r, double omega, int depth);

struct OperatorGradient {
  Matrix value;     // the operator T
  Matrix d_r;       // ∂L/∂R
  double d_omega;   // ∂L/∂ω
};

// Reverse pass through the recursion for a cotangent d_t = ∂L/∂T.
OperatorGradient unrolled_operator_vjp(const Matrix& r, double omega, int depth, const Matrix& d_t);

struct BilevelGradient {
  Matrix value;  // (I + RᵀR)⁻¹
  Matrix d_r;
};

BilevelGradient bilevel_operator_vjp(const Matrix& r, const Matrix& d_t);

}  // namespace unrollrisk
