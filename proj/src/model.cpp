#include "unrollrisk/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "unrollrisk/parallel.hpp"

namespace unrollrisk {

std::string_view to_string(DataModel kind) {
  return kind == DataModel::RandomConstant ? "const" : "iid";
}

DataModel parse_data_model(std::string_view name) {
  if (name == "const") return DataModel::RandomConstant;
  if (name == "iid") return DataModel::Iid;
  throw std::invalid_argument("unknown data model '" + std::string(name) + "' (expected const or iid)");
}

void ModelParams::validate() const {
  if (n < 1) throw std::invalid_argument("model: n must be >= 1");
  if (!std::isfinite(mu)) throw std::invalid_argument("model: mu must be finite");
  if (!(theta2 >= 0.0) || !std::isfinite(theta2)) throw std::invalid_argument("model: theta2 must be >= 0");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("model: sigma2 must be > 0");
}

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json{{"n", p.n}, {"mu", p.mu}, {"theta2", p.theta2}, {"sigma2", p.sigma2},
                     {"kind", std::string(to_string(p.kind))}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  ModelParams out;
  out.n = j.at("n").get<int>();
  out.mu = j.at("mu").get<double>();
  out.theta2 = j.at("theta2").get<double>();
  out.sigma2 = j.at("sigma2").get<double>();
  out.kind = parse_data_model(j.at("kind").get<std::string>());
  out.validate();
  p = out;
}

void draw_pair(const ModelParams& params, Rng& rng, double* clean, double* noisy) {
  const double theta = std::sqrt(params.theta2);
  const double sigma = std::sqrt(params.sigma2);
  if (params.kind == DataModel::RandomConstant) {
    const double level = rng.normal(params.mu, theta);
    for (int j = 0; j < params.n; ++j) clean[j] = level;
  } else {
    for (int j = 0; j < params.n; ++j) clean[j] = rng.normal(params.mu, theta);
  }
  for (int j = 0; j < params.n; ++j) noisy[j] = clean[j] + sigma * rng.normal();
}

SampleBatch sample_batch(const ModelParams& params, std::size_t m, std::uint64_t seed, unsigned threads) {
  params.validate();
  if (m == 0) throw std::invalid_argument("sample_batch: m must be >= 1");
  const auto n = static_cast<Eigen::Index>(params.n);
  // row-major scratch so each row is contiguous for draw_pair
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> clean(m, n), noisy(m, n);
  const std::size_t shards = (m + kSampleShardRows - 1) / kSampleShardRows;
  parallel_for(shards, threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    const std::size_t end = std::min(m, (s + 1) * kSampleShardRows);
    for (std::size_t i = s * kSampleShardRows; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      draw_pair(params, rng, clean.row(row).data(), noisy.row(row).data());
    }
  });
  return SampleBatch{clean, noisy, seed};
}

}  // namespace unrollrisk
