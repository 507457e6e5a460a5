#pragma once

#include <cstddef>
#include <cstdint>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/model.hpp"

namespace unrollrisk {

struct RiskValue {
  double value = 0.0;
  DataModel model_kind = DataModel::RandomConstant;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
};

// Expected ½‖T(y+ε)−y‖² in closed form for params.kind.
RiskValue true_risk(const Matrix& t, const ModelParams& params);
RiskValue true_risk(const LinearEstimator& t, const ModelParams& params);

// (σ²/2)‖T‖_F²
double noise_term(const Matrix& t, double sigma2);
double noise_term(const LinearEstimator& t, double sigma2);

// E‖(T−I)y‖², not halved.
double data_term(const Matrix& t, const ModelParams& params);
double data_term(const LinearEstimator& t, const ModelParams& params);

// Sample mean of ½‖T(y+ε)−y‖² over m draws from the model sampler.
McEstimate mc_risk(const Matrix& t, const ModelParams& params, std::size_t m, std::uint64_t seed,
                   unsigned threads = 1);
McEstimate mc_risk(const LinearEstimator& t, const ModelParams& params, std::size_t m, std::uint64_t seed,
                   unsigned threads = 1);

// ∂E/∂T of the closed-form risk.
Matrix true_risk_gradient(const Matrix& t, const ModelParams& params);

double risk_ratio(const RiskValue& numerator, const RiskValue& denominator);

}  // namespace unrollrisk
