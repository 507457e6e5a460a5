#include "unrollrisk/risk.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "unrollrisk/numeric.hpp"
#include "unrollrisk/parallel.hpp"

namespace unrollrisk {

namespace {

void check_square(const Matrix& t, int n) {
  if (t.rows() != n || t.cols() != n)
    throw std::invalid_argument("dimension mismatch: estimator is " + std::to_string(t.rows()) + "x" +
                                std::to_string(t.cols()) + ", model has n = " + std::to_string(n));
}

}  // namespace

RiskValue true_risk(const Matrix& t, const ModelParams& params) {
  params.validate();
  check_square(t, params.n);
  const Eigen::Index n = t.rows();
  const Matrix residual = t - Matrix::Identity(n, n);
  const double bias_sq = (residual * Vector::Ones(n)).squaredNorm();
  const double t_frob_sq = t.squaredNorm();
  const double mu2 = params.mu * params.mu;
  double value = 0.0;
  if (params.kind == DataModel::RandomConstant) {
    value = 0.5 * (mu2 + params.theta2) * bias_sq + 0.5 * params.sigma2 * t_frob_sq;
  } else {
    value = 0.5 * mu2 * bias_sq + 0.5 * params.theta2 * residual.squaredNorm() + 0.5 * params.sigma2 * t_frob_sq;
  }
  return {value, params.kind};
}

RiskValue true_risk(const LinearEstimator& t, const ModelParams& params) { return true_risk(t.matrix(), params); }

Matrix true_risk_gradient(const Matrix& t, const ModelParams& params) {
  params.validate();
  check_square(t, params.n);
  const Eigen::Index n = t.rows();
  const Matrix residual = t - Matrix::Identity(n, n);
  const Vector bias = residual * Vector::Ones(n);
  const double mu2 = params.mu * params.mu;
  Matrix g = params.sigma2 * t;
  if (params.kind == DataModel::RandomConstant) {
    g += (mu2 + params.theta2) * bias * Vector::Ones(n).transpose();
  } else {
    g += mu2 * bias * Vector::Ones(n).transpose() + params.theta2 * residual;
  }
  return g;
}

double noise_term(const Matrix& t, double sigma2) { return 0.5 * sigma2 * t.squaredNorm(); }
double noise_term(const LinearEstimator& t, double sigma2) { return noise_term(t.matrix(), sigma2); }

double data_term(const Matrix& t, const ModelParams& params) {
  params.validate();
  check_square(t, params.n);
  const Eigen::Index n = t.rows();
  const Matrix residual = t - Matrix::Identity(n, n);
  const double bias_sq = (residual * Vector::Ones(n)).squaredNorm();
  const double mu2 = params.mu * params.mu;
  if (params.kind == DataModel::RandomConstant) return (mu2 + params.theta2) * bias_sq;
  return mu2 * bias_sq + params.theta2 * residual.squaredNorm();
}

double data_term(const LinearEstimator& t, const ModelParams& params) { return data_term(t.matrix(), params); }

McEstimate mc_risk(const Matrix& t, const ModelParams& params, std::size_t m, std::uint64_t seed,
                   unsigned threads) {
  params.validate();
  check_square(t, params.n);
  if (m < 2) throw std::invalid_argument("mc_risk: m must be >= 2");
  const std::size_t shards = (m + kSampleShardRows - 1) / kSampleShardRows;
  std::vector<RunningStats> partial(shards);
  parallel_for(shards, threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    Vector clean(params.n), noisy(params.n);
    const std::size_t end = std::min(m, (s + 1) * kSampleShardRows);
    RunningStats stats;
    for (std::size_t i = s * kSampleShardRows; i < end; ++i) {
      draw_pair(params, rng, clean.data(), noisy.data());
      stats.push(0.5 * (t * noisy - clean).squaredNorm());
    }
    partial[s] = stats;
  });
  RunningStats total;
  for (const auto& p : partial) total.merge(p);
  return {total.mean(), total.std_error(), m, seed};
}

McEstimate mc_risk(const LinearEstimator& t, const ModelParams& params, std::size_t m, std::uint64_t seed,
                   unsigned threads) {
  return mc_risk(t.matrix(), params, m, seed, threads);
}

double risk_ratio(const RiskValue& numerator, const RiskValue& denominator) {
  if (numerator.model_kind != denominator.model_kind)
    throw std::invalid_argument("risk_ratio: data models differ");
  if (!(denominator.value > 0.0)) throw std::invalid_argument("risk_ratio: denominator must be > 0");
  return numerator.value / denominator.value;
}

}  // namespace unrollrisk
