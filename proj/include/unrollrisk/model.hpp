#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "unrollrisk/rng.hpp"
#include "unrollrisk/types.hpp"

namespace unrollrisk {

enum class DataModel { RandomConstant, Iid };

std::string_view to_string(DataModel kind);      // "const" | "iid"
DataModel parse_data_model(std::string_view name);

struct ModelParams {
  int n = 1;
  double mu = 0.0;
  double theta2 = 0.0;
  double sigma2 = 1.0;
  DataModel kind = DataModel::RandomConstant;

  // Throws std::invalid_argument unless n >= 1, theta2 >= 0, sigma2 > 0 and all finite.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);

struct SampleBatch {
  Matrix clean;  // m x n ground truths
  Matrix noisy;  // clean + noise
  std::uint64_t seed = 0;
};

// Rows are produced in fixed-size shards, each with its own derived stream, so
// large batches can be generated in parallel without changing the result.
inline constexpr std::size_t kSampleShardRows = 4096;

// Draws one (clean, noisy) row pair into the given row buffers.
void draw_pair(const ModelParams& params, Rng& rng, double* clean, double* noisy);

SampleBatch sample_batch(const ModelParams& params, std::size_t m, std::uint64_t seed,
                         unsigned threads = 1);

}  // namespace unrollrisk
