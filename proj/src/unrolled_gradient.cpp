#include "unrollrisk/estimators.hpp"
#include "unrollrisk//unrolled_gradient.hpp"

#include <stdexcept>
#include <vector>

namespace unrollrisk {

namespace {

Matrix step_matrix(const Matrix& gram, double omega) {
  const Eigen::Index n = gram.rows();
  return (1.0 - omega) * Matrix::Identity(n, n) - omega * gram;
}

}  // namespace

Matrix unrolled_operator(const Matrix& r, double omega, int depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  const Eigen::Index n = r.cols();
  const Matrix m = step_matrix(r.transpose() * r, omega);
  Matrix z = Matrix::Zero(n, n);
  for (int i = 0; i < depth; ++i) {
    z = m * z;
    z.diagonal().array() += omega;
  }
  return z;
}

OperatorGradient unrolled_operator_vjp(const Matrix& r, double omega, int depth, const Matrix& d_t) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  const Eigen::Index n = r.cols();
  if (d_t.rows() != n || d_t.cols() != n) throw std::invalid_argument("vjp: cotangent shape mismatch");
  const Matrix gram = r.transpose() * r;
  const Matrix m = step_matrix(gram, omega);
  Matrix shifted = gram;
  shifted.diagonal().array() += 1.0;  // I + G

  std::vector<Matrix> iterates;
  iterates.reserve(static_cast<std::size_t>(depth) + 1);
  iterates.push_back(Matrix::Zero(n, n));
  for (int i = 0; i < depth; ++i) {
    Matrix next = m * iterates.back();
    next.diagonal().array() += omega;
    iterates.push_back(std::move(next));
  }

  Matrix bar = d_t;
  Matrix m_bar = Matrix::Zero(n, n);
  double omega_bar = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    const Matrix& z = iterates[static_cast<std::size_t>(i)];
    m_bar.noalias() += bar * z.transpose();
    // ∂Z_{i+1}/∂ω = −(I+G)Z_i + I
    omega_bar += -(bar.cwiseProduct(shifted * z)).sum() + bar.trace();
    bar = m.transpose() * bar;
  }
  const Matrix g_bar = -omega * m_bar;
  return {iterates.back(), r * (g_bar + g_bar.transpose()), omega_bar};
}

BilevelGradient bilevel_operator_vjp(const Matrix& r, const Matrix& d_t) {
  const Eigen::Index n = r.cols();
  if (d_t.rows() != n || d_t.cols() != n) throw std::invalid_argument("vjp: cotangent shape mismatch");
  Matrix t = bilevel_estimator(Regularizer(r)).matrix();
  const Matrix g_bar = -t.transpose() * d_t * t.transpose();
  return {std::move(t), r * (g_bar + g_bar.transpose())};
}

}  // namespace unrollrisk
