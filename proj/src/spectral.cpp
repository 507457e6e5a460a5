#include "unrollrisk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

namespace unrollrisk {

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

bool is_symmetric(const Matrix& t, double rel_tol) {
  if (t.rows() != t.cols()) return false;
  const double scale = std::max(t.norm(), 1e-300);
  return (t - t.transpose()).norm() <= rel_tol * scale;
}

namespace {

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace

SpectralDecomposition sym_eig(const Matrix& t, double symmetry_tol) {
  if (t.rows() != t.cols()) throw std::invalid_argument("sym_eig: matrix is not square");
  if (!is_symmetric(t, symmetry_tol)) throw std::invalid_argument("sym_eig: matrix is not symmetric");
  const Eigen::Index n = t.rows();
  Matrix a = 0.5 * (t + t.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double frob = a.norm();
  const double stop = 1e-30 * frob * frob;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal_sq(a) <= stop) break;
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // negligible relative to both diagonal entries: zero it without rotating
        if (std::abs(apq) * 1e18 < std::abs(app) && std::abs(apq) * 1e18 < std::abs(aqq) && sweep > 3) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double tan_phi;
        if (std::abs(theta) > 1e150) {
          tan_phi = 0.5 / theta;
        } else {
          tan_phi = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(tan_phi * tan_phi + 1.0);
        const double s = tan_phi * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  SpectralDecomposition out{Matrix(n, n), Vector(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

SpectralDecomposition gram_eig(const Matrix& r) {
  const Eigen::Index n = r.cols();
  Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullV);
  SpectralDecomposition out;
  out.eigenvectors = svd.matrixV();
  out.eigenvalues = Vector::Zero(n);
  const Vector& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) out.eigenvalues(i) = s(i) * s(i);
  return out;
}

}  // namespace unrollrisk
