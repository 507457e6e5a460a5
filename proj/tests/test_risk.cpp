#include <cmath>

#include <gtest/gtest.h>

#include "unrollrisk/numeric.hpp"
#include "unrollrisk/risk.hpp"
#include "unrollrisk/rng.hpp"

using namespace unrollrisk;

namespace {

ModelParams make(int n, double mu, double theta2, double sigma2, DataModel kind) {
  ModelParams p;
  p.n = n;
  p.mu = mu;
  p.theta2 = theta2;
  p.sigma2 = sigma2;
  p.kind = kind;
  return p;
}

Matrix random_matrix(int n, Rng& rng, double scale = 1.0) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// tr((T−I)ᵀ(T−I)·E[yyᵀ]) + σ² tr(TᵀT), halved: an independent route through the second moment.
double risk_by_second_moment(const Matrix& t, const ModelParams& p) {
  const int n = p.n;
  const Matrix ones = Matrix::Ones(n, n);
  Matrix second = p.kind == DataModel::RandomConstant
                      ? Matrix((p.mu * p.mu + p.theta2) * ones)
                      : Matrix(p.mu * p.mu * ones + p.theta2 * Matrix::Identity(n, n));
  const Matrix d = t - Matrix::Identity(n, n);
  return 0.5 * (d.transpose() * d * second).trace() + 0.5 * p.sigma2 * (t.transpose() * t).trace();
}

}  // namespace

TEST(TrueRisk, IdentityIsPureNoise) {
  for (auto kind : {DataModel::RandomConstant, DataModel::Iid}) {
    const auto p = make(4, 1.3, 0.7, 0.2, kind);
    EXPECT_DOUBLE_EQ(true_risk(Matrix::Identity(4, 4), p).value, 0.2 * 4 / 2);
  }
}

TEST(TrueRisk, ZeroMap) {
  EXPECT_DOUBLE_EQ(true_risk(Matrix::Zero(3, 3), make(3, 2, 0.5, 1, DataModel::RandomConstant)).value,
                   (4 + 0.5) * 3 / 2);
  EXPECT_DOUBLE_EQ(true_risk(Matrix::Zero(2, 2), make(2, 1, 1, 1, DataModel::Iid)).value, 2.0);
}

TEST(TrueRisk, ReportsKind) {
  EXPECT_EQ(true_risk(Matrix::Zero(2, 2), make(2, 1, 1, 1, DataModel::Iid)).model_kind, DataModel::Iid);
}

TEST(TrueRisk, MatchesSecondMomentRoute) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 7;
    const auto p = make(n, rng.normal(), rng.uniform(0, 2), rng.uniform(0.01, 2),
                        trial % 2 ? DataModel::Iid : DataModel::RandomConstant);
    const Matrix t = random_matrix(n, rng);
    const double expected = risk_by_second_moment(t, p);
    EXPECT_NEAR(true_risk(t, p).value, expected, 1e-12 * std::max(1.0, expected)) << trial;
  }
}

TEST(TrueRisk, DecouplesIntoDataAndNoise) {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const auto p = make(n, rng.normal(), rng.uniform(0, 2), rng.uniform(0.01, 2),
                        trial % 2 ? DataModel::Iid : DataModel::RandomConstant);
    const Matrix t = random_matrix(n, rng);
    const double assembled = 0.5 * data_term(t, p) + noise_term(t, p.sigma2);
    EXPECT_NEAR(true_risk(t, p).value, assembled, 1e-14 * assembled);
  }
}

TEST(TrueRisk, IidWithZeroThetaEqualsConst) {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 5;
    const Matrix t = random_matrix(n, rng);
    const double mu = rng.normal();
    const double s2 = rng.uniform(0.1, 1);
    EXPECT_EQ(true_risk(t, make(n, mu, 0, s2, DataModel::Iid)).value,
              true_risk(t, make(n, mu, 0, s2, DataModel::RandomConstant)).value);
  }
}

TEST(TrueRisk, ScalarModelsCoincide) {
  Rng rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix t = Matrix::Constant(1, 1, rng.normal());
    const double mu = rng.normal(), th = rng.uniform(0, 1), s2 = rng.uniform(0.1, 1);
    // the two formulas group the same terms differently, so agreement is to rounding
    const double a = true_risk(t, make(1, mu, th, s2, DataModel::Iid)).value;
    EXPECT_NEAR(a, true_risk(t, make(1, mu, th, s2, DataModel::RandomConstant)).value, 4e-16 * a);
  }
}

TEST(NoiseTerm, Trivial) {
  EXPECT_DOUBLE_EQ(noise_term(Matrix::Identity(3, 3), 1.0), 1.5);
  EXPECT_EQ(noise_term(Matrix::Zero(3, 3), 1.0), 0.0);
}

TEST(NoiseTerm, MatchesIndependentMonteCarlo) {
  Rng rng(25);
  const Matrix t = random_matrix(3, rng);
  Rng draws(26);
  RunningStats stats;
  for (int i = 0; i < 100000; ++i) {
    Vector e(3);
    for (int j = 0; j < 3; ++j) e(j) = draws.normal(0.0, std::sqrt(0.4));
    stats.push(0.5 * (t * e).squaredNorm());
  }
  EXPECT_LE(std::abs(stats.mean() - noise_term(t, 0.4)), 3 * stats.std_error());
}

TEST(DataTerm, Trivial) {
  const auto p = make(2, 1, 0, 1, DataModel::RandomConstant);
  EXPECT_EQ(data_term(Matrix::Identity(2, 2), p), 0.0);
  EXPECT_DOUBLE_EQ(data_term(Matrix::Zero(2, 2), p), 2.0);
}

TEST(DataTerm, IidMatchesIndependentMonteCarlo) {
  Rng rng(27);
  const Matrix t = random_matrix(3, rng, 0.5);
  const auto p = make(3, 0.8, 0.6, 1, DataModel::Iid);
  Rng draws(28);
  RunningStats stats;
  const Matrix d = t - Matrix::Identity(3, 3);
  for (int i = 0; i < 100000; ++i) {
    Vector y(3);
    for (int j = 0; j < 3; ++j) y(j) = draws.normal(p.mu, std::sqrt(p.theta2));
    stats.push((d * y).squaredNorm());
  }
  EXPECT_LE(std::abs(stats.mean() - data_term(t, p)), 3 * stats.std_error());
}

TEST(McRisk, IdentityConst) {
  const auto p = make(3, 0, 1, 1, DataModel::RandomConstant);
  const auto est = mc_risk(Matrix::Identity(3, 3), p, 200000, 5);
  EXPECT_EQ(est.m, 200000u);
  EXPECT_EQ(est.seed, 5u);
  EXPECT_LE(std::abs(est.mean - 1.5), 3 * est.std_error);
}

TEST(McRisk, NoSignalNoNoise) {
  const auto p = make(3, 0, 0, 1e-30, DataModel::Iid);
  Rng rng(29);
  EXPECT_LE(mc_risk(random_matrix(3, rng), p, 1000, 1).mean, 1e-25);
}

TEST(McRisk, DeterministicAcrossRunsAndThreads) {
  Rng rng(30);
  const Matrix t = random_matrix(4, rng);
  const auto p = make(4, 1, 0.5, 0.3, DataModel::Iid);
  const auto a = mc_risk(t, p, 20000, 9, 1);
  const auto b = mc_risk(t, p, 20000, 9, 1);
  const auto c = mc_risk(t, p, 20000, 9, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_NEAR(a.mean, c.mean, 1e-12 * a.mean);
}

TEST(McRisk, ConsistentWithClosedForm) {
  Rng rng(31);
  int inside = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 5;
    const auto p = make(n, rng.normal(), rng.uniform(0, 1), rng.uniform(0.05, 1),
                        trial % 2 ? DataModel::Iid : DataModel::RandomConstant);
    const Matrix t = random_matrix(n, rng, 0.5);
    const auto est = mc_risk(t, p, 20000, 100 + trial);
    inside += std::abs(est.mean - true_risk(t, p).value) <= 3 * est.std_error;
  }
  EXPECT_GE(inside, 27);
}

TEST(RiskGradient, MatchesCentralDifferences) {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 4;
    const auto p = make(n, rng.normal(), rng.uniform(0, 1), rng.uniform(0.05, 1),
                        trial % 2 ? DataModel::Iid : DataModel::RandomConstant);
    const Matrix t = random_matrix(n, rng);
    const Matrix g = true_risk_gradient(t, p);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix tp = t, tm = t;
        tp(i, j) += h;
        tm(i, j) -= h;
        const double fd = (true_risk(tp, p).value - true_risk(tm, p).value) / (2 * h);
        EXPECT_NEAR(g(i, j), fd, 1e-6 * (1 + std::abs(fd)));
      }
  }
}

TEST(RiskRatio, Basics) {
  const RiskValue a{0.5, DataModel::Iid};
  EXPECT_EQ(risk_ratio(a, a), 1.0);
  EXPECT_EQ(risk_ratio({0.0, DataModel::Iid}, a), 0.0);
  EXPECT_THROW(risk_ratio(a, {0.5, DataModel::RandomConstant}), std::invalid_argument);
  EXPECT_THROW(risk_ratio(a, {0.0, DataModel::Iid}), std::invalid_argument);
}

TEST(RiskRatio, LinearOverBilevelConst) {
  // n=2, k=1, μ=1, θ=0, σ=1: best linear ½σ²·n/(n+σ²) = 1/3, bilevel infimum ½σ²(n−k) = 1/2
  const RiskValue linear{0.5 * 2.0 / 3.0, DataModel::RandomConstant};
  const RiskValue bilevel{0.5, DataModel::RandomConstant};
  EXPECT_NEAR(risk_ratio(linear, bilevel), 2.0 / 3.0, 1e-15);
}
