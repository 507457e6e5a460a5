#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "unrollrisk/model.hpp"

using namespace unrollrisk;

TEST(SampleBatch, ZeroVarianceConstantRows) {
  const ModelParams p{3, 5.0, 0.0, 1e-30, DataModel::RandomConstant};
  const SampleBatch b = sample_batch(p, 2, 11);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(b.clean(i, j), 5.0);
}

TEST(SampleBatch, IidCleanMeanWithinCltBand) {
  const ModelParams p{2, 0.0, 1.0, 1.0, DataModel::Iid};
  const SampleBatch b = sample_batch(p, 100000, 5);
  EXPECT_LE(std::abs(b.clean.mean()), 3.0 / std::sqrt(2.0e5));
}

TEST(SampleBatch, SameSeedBitIdentical) {
  const ModelParams p{4, 0.3, 0.7, 0.2, DataModel::Iid};
  const SampleBatch a = sample_batch(p, 5000, 99);
  const SampleBatch b = sample_batch(p, 5000, 99, 4);
  EXPECT_TRUE(a.clean == b.clean);
  EXPECT_TRUE(a.noisy == b.noisy);
  const SampleBatch c = sample_batch(p, 5000, 100);
  EXPECT_FALSE(a.clean == c.clean);
}

// mean and variance of entries within three standard errors
void expect_moments(const Matrix& values, double mean, double var) {
  const double m = static_cast<double>(values.size());
  const double emp_mean = values.mean();
  const double emp_var = (values.array() - emp_mean).square().sum() / (m - 1);
  EXPECT_LE(std::abs(emp_mean - mean), 3.0 * std::sqrt(var / m) + 1e-15);
  // Gaussian: Var(s²) ≈ 2σ⁴/m
  EXPECT_LE(std::abs(emp_var - var), 3.0 * std::sqrt(2.0 * var * var / m) + 1e-15);
}

TEST(SampleBatch, MomentsBothModels) {
  for (DataModel kind : {DataModel::RandomConstant, DataModel::Iid}) {
    const ModelParams p{3, 1.5, 0.8, 0.3, kind};
    const SampleBatch b = sample_batch(p, 200000, 8);
    expect_moments(b.noisy - b.clean, 0.0, 0.3);
    if (kind == DataModel::Iid) {
      expect_moments(b.clean, 1.5, 0.8);
    } else {
      expect_moments(b.clean.col(0), 1.5, 0.8);
    }
  }
}

TEST(SampleBatch, RandomConstantRowsExactlyConstant) {
  const ModelParams p{6, -0.4, 2.0, 0.5, DataModel::RandomConstant};
  const SampleBatch b = sample_batch(p, 10000, 1);
  EXPECT_EQ((b.clean.rowwise().maxCoeff() - b.clean.rowwise().minCoeff()).maxCoeff(), 0.0);
}

TEST(SampleBatch, RejectsBadInput) {
  const ModelParams p{2, 0.0, 1.0, 1.0, DataModel::Iid};
  EXPECT_THROW(sample_batch(p, 0, 1), std::invalid_argument);
  EXPECT_THROW(sample_batch(ModelParams{0, 0, 1, 1, DataModel::Iid}, 1, 1), std::invalid_argument);
  EXPECT_THROW(sample_batch(ModelParams{2, 0, -1, 1, DataModel::Iid}, 1, 1), std::invalid_argument);
  EXPECT_THROW(sample_batch(ModelParams{2, 0, 1, 0, DataModel::Iid}, 1, 1), std::invalid_argument);
}

TEST(ModelParams, JsonRoundTrip) {
  const ModelParams p{7, -1.25, 0.5, 0.01, DataModel::Iid};
  const nlohmann::json j = p;
  EXPECT_EQ(j.at("kind"), "iid");
  const auto q = j.get<ModelParams>();
  EXPECT_EQ(q.n, 7);
  EXPECT_EQ(q.mu, -1.25);
  EXPECT_EQ(q.theta2, 0.5);
  EXPECT_EQ(q.sigma2, 0.01);
  EXPECT_EQ(q.kind, DataModel::Iid);
  auto bad = j;
  bad["kind"] = "poisson";
  EXPECT_THROW(bad.get<ModelParams>(), std::invalid_argument);
}
