#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "unrollrisk/rng.hpp"
#include "unrollrisk/spectral.hpp"

using namespace unrollrisk;

namespace {

Matrix random_symmetric(int n, Rng& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a + a.transpose();
}

}  // namespace

TEST(SymEig, DiagonalSortedDescending) {
  const Matrix d = Vector(Eigen::Vector3d(3, 1, 2)).asDiagonal();
  const auto sd = sym_eig(d);
  EXPECT_EQ(sd.eigenvalues(0), 3);
  EXPECT_EQ(sd.eigenvalues(1), 2);
  EXPECT_EQ(sd.eigenvalues(2), 1);
}

TEST(SymEig, IdentityAllOnes) {
  const auto sd = sym_eig(Matrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(sd.eigenvalues(i), 1.0);
  EXPECT_LE((sd.eigenvectors.transpose() * sd.eigenvectors - Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(SymEig, RandomReconstructionAndOrthonormality) {
  Rng rng(3);
  for (int n : {1, 2, 5, 9, 20, 40}) {
    const Matrix a = random_symmetric(n, rng);
    const auto sd = sym_eig(a);
    EXPECT_LE((sd.eigenvectors.transpose() * sd.eigenvectors - Matrix::Identity(n, n)).norm(), 1e-10) << n;
    EXPECT_LE((sd.reconstruct() - a).norm(), 1e-9 * a.norm()) << n;
    for (int i = 1; i < n; ++i) EXPECT_GE(sd.eigenvalues(i - 1), sd.eigenvalues(i));
  }
}

TEST(SymEig, AgreesWithReferenceSolver) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 7;
    const Matrix a = random_symmetric(n, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
    Vector expected = ref.eigenvalues().reverse();
    EXPECT_LE((sym_eig(a).eigenvalues - expected).norm(), 1e-11 * (1 + a.norm()));
  }
}

TEST(SymEig, RepeatedEigenvalues) {
  Rng rng(5);
  const Matrix q = Eigen::HouseholderQR<Matrix>(random_symmetric(6, rng)).householderQ();
  Vector vals(6);
  vals << 2, 2, 2, 0.5, 0.5, -1;
  const Matrix a = q * vals.asDiagonal() * q.transpose();
  const auto sd = sym_eig(0.5 * (a + a.transpose()));
  EXPECT_LE((sd.eigenvalues - vals).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SymEig, RejectsAsymmetric) {
  Matrix a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(sym_eig(a), std::invalid_argument);
  EXPECT_THROW(sym_eig(Matrix::Zero(2, 3)), std::invalid_argument);
}
