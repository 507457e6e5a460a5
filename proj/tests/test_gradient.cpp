#include <cmath>

#include <gtest/gtest.h>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/experiment.hpp"
#include "unrollrisk/rng.hpp"
#include "unrollrisk/unrolled_gradient.hpp"

using namespace unrollrisk;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST(UnrolledOperator, MatchesClosedFormEstimator) {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 6;
    const int k = 1 + trial % n;
    const int depth = 1 + trial % 9;
    const double w = rng.uniform(0.1, 1.9);
    const Matrix r = random_matrix(k, n, rng, 0.5);
    const Matrix t = unrolled_operator(r, w, depth);
    const Matrix ref = unroll_estimator(Regularizer(r), UnrollConfig::fixed(depth, w)).matrix();
    EXPECT_LE((t - ref).norm(), 1e-11 * (1 + ref.norm())) << trial;
  }
}

TEST(UnrolledOperatorVjp, MatchesCentralDifferences) {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5;
    const int k = 1 + trial % n;
    const int depth = 1 + trial % 4;
    const double w = rng.uniform(0.2, 1.5);
    const Matrix r = random_matrix(k, n, rng, 0.6);
    const Matrix cot = random_matrix(n, n, rng);
    const auto g = unrolled_operator_vjp(r, w, depth, cot);
    auto scalar = [&](const Matrix& rr, double ww) { return (unrolled_operator(rr, ww, depth).cwiseProduct(cot)).sum(); };
    const double h = 1e-5;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix rp = r, rm = r;
        rp(i, j) += h;
        rm(i, j) -= h;
        const double fd = (scalar(rp, w) - scalar(rm, w)) / (2 * h);
        EXPECT_LE(rel_diff(g.d_r(i, j), fd), 1e-5) << trial;
      }
    const double fd_w = (scalar(r, w + h) - scalar(r, w - h)) / (2 * h);
    EXPECT_LE(rel_diff(g.d_omega, fd_w), 1e-5) << trial;
  }
}

TEST(BilevelOperatorVjp, MatchesCentralDifferences) {
  Rng rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 5;
    const int k = 1 + trial % n;
    const Matrix r = random_matrix(k, n, rng);
    const Matrix cot = random_matrix(n, n, rng);
    const auto g = bilevel_operator_vjp(r, cot);
    auto scalar = [&](const Matrix& rr) {
      return (bilevel_estimator(Regularizer(rr)).matrix().cwiseProduct(cot)).sum();
    };
    const double h = 1e-6;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix rp = r, rm = r;
        rp(i, j) += h;
        rm(i, j) -= h;
        EXPECT_LE(rel_diff(g.d_r(i, j), (scalar(rp) - scalar(rm)) / (2 * h)), 1e-5) << trial;
      }
  }
}

TEST(LossGradient, StatisticsRouteMatchesPerSampleLoss) {
  Rng rng(64);
  const int n = 4;
  const Matrix clean = random_matrix(50, n, rng);
  const Matrix noisy = clean + random_matrix(50, n, rng, 0.3);
  const Matrix r = random_matrix(2, n, rng, 0.4);
  const auto stats = sufficient_stats(clean, noisy);
  for (int depth : {1, 3, 6}) {
    const double a = unrolled_loss_gradient(r, 0.7, depth, stats).loss;
    const double b = empirical_unrolled_loss(r, 0.7, depth, clean, noisy);
    EXPECT_NEAR(a, b, 1e-12 * b) << depth;
  }
}

TEST(LossGradient, MatchesCentralDifferencesIncludingSoftplus) {
  Rng rng(65);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 5;
    const int k = 1 + trial % n;
    const int depth = 1 + trial % 4;
    const Matrix clean = random_matrix(30, n, rng);
    const Matrix noisy = clean + random_matrix(30, n, rng, 0.2);
    const auto stats = sufficient_stats(clean, noisy);
    const Matrix r = random_matrix(k, n, rng, 0.5);
    const double raw = rng.uniform(-2, 0.5);
    const double w = softplus(raw);
    const auto g = unrolled_loss_gradient(r, w, depth, stats);
    const double h = 1e-5;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix rp = r, rm = r;
        rp(i, j) += h;
        rm(i, j) -= h;
        const double fd = (empirical_unrolled_loss(rp, w, depth, clean, noisy) -
                           empirical_unrolled_loss(rm, w, depth, clean, noisy)) /
                          (2 * h);
        EXPECT_LE(rel_diff(g.d_r(i, j), fd), 1e-5) << trial;
      }
    const double d_raw = g.d_omega / (1 + std::exp(-raw));
    const double fd_raw = (empirical_unrolled_loss(r, softplus(raw + h), depth, clean, noisy) -
                           empirical_unrolled_loss(r, softplus(raw - h), depth, clean, noisy)) /
                          (2 * h);
    EXPECT_LE(rel_diff(d_raw, fd_raw), 1e-5) << trial;
  }
}
