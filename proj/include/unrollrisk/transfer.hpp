#pragma once

namespace unrollrisk {

// Eigenvalue map of the N-step unrolled estimator: s ↦ (1 − (1−ω(1+s))ᴺ)/(1+s).
// Evaluated as ω·Σ_{j<N} rʲ with r = 1−ω(1+s). Throws for s < 0 or depth < 1.
double transfer_f(double s, int depth, double omega);

// Value of the transfer map at s = 0: 1 − (1−ω)ᴺ.
double rho(int depth, double omega);

// Σ_{j<N} rʲ, i.e. (1−rᴺ)/(1−r) with the limit N at r = 1.
double geometric_sum(double r, int depth);

}  // namespace unrollrisk
