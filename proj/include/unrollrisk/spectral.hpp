#pragma once

#include "unrollrisk/types.hpp"

namespace unrollrisk {

struct SpectralDecomposition {
  Matrix eigenvectors;  // orthonormal columns
  Vector eigenvalues;   // descending

  Matrix reconstruct() const;
};

// ‖T − Tᵀ‖_F ≤ rel_tol·max(‖T‖_F, tiny); false for non-square input.
bool is_symmetric(const Matrix& t, double rel_tol);

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
// Throws std::invalid_argument if t is not square or not symmetric to symmetry_tol.
SpectralDecomposition sym_eig(const Matrix& t, double symmetry_tol = 1e-9);

// Eigendecomposition of RᵀR from the SVD of R (n = R.cols() eigenpairs, descending).
// Accurate for the small eigenvalues even when R has very large entries.
SpectralDecomposition gram_eig(const Matrix& r);

}  // namespace unrollrisk
