#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "unrollrisk/model.hpp"
#include "unrollrisk/types.hpp"

namespace unrollrisk {

struct FixedStep {
  double omega = 1.0;
};
struct LearnedStep {
  double omega_raw = 0.0;  // ω = softplus(omega_raw)
};
using StepsizeMode = std::variant<FixedStep, LearnedStep>;

std::string_view mode_name(const StepsizeMode& mode);  // "fixed" | "learned"
double initial_omega(const StepsizeMode& mode);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int iterations = 2000;
};

struct TrainConfig {
  int k = 1;
  int n = 1;
  int depth = 1;
  StepsizeMode stepsize = FixedStep{};
  AdamConfig adam;
  std::size_t batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;
  double init_scale = 1.0;  // R entries ~ N(0, (init_scale/√n)²)

  void validate() const;
};

struct SyntheticSource {
  ModelParams params;
  std::uint64_t seed = 0;
};
struct FileSource {
  std::filesystem::path path;
};

struct FrameDataset {
  Matrix frames;  // m x n clean signals
  std::variant<SyntheticSource, FileSource> source;
  double noise_sigma = 0.0;
};

// Non-overlapping length-n windows of a signal file, scaled to unit max-abs.
// CSV (one value per line) or, for .bin/.f64/.raw, little-endian f64.
// limit = 0 keeps every window.
FrameDataset ingest_frames(const std::filesystem::path& path, int n, std::size_t limit, double noise_sigma);

// Clean rows of sample_batch(params, m, seed); noise level sqrt(sigma2).
FrameDataset synthetic_frames(const ModelParams& params, std::size_t m, std::uint64_t seed);

// Second moments of paired rows: xx = XᵀX/m, yx = YᵀX/m, yy = tr(YᵀY)/m.
struct SufficientStats {
  Matrix xx;
  Matrix yx;
  double yy = 0.0;
  std::size_t m = 0;
};
SufficientStats sufficient_stats(const Matrix& clean, const Matrix& noisy);

struct LossGradient {
  double loss = 0.0;
  Matrix d_r;
  double d_omega = 0.0;
};

// Mean of ½‖Tx − y‖² with T the N-step unrolled operator, and its gradient.
LossGradient unrolled_loss_gradient(const Matrix& r, double omega, int depth, const SufficientStats& stats);

// Same loss evaluated sample by sample with the literal gradient-descent iterations.
double empirical_unrolled_loss(const Matrix& r, double omega, int depth, const Matrix& clean, const Matrix& noisy);

struct TrainResult {
  Matrix r;
  double omega = 0.0;
  std::vector<double> loss_trace;
  double mse_train = 0.0;
  double mse_heldout = 0.0;
  double heldout_std_error = 0.0;
  std::size_t train_frames = 0;
  std::size_t heldout_frames = 0;
  std::uint64_t seed = 0;
};

// The last 20% of frames are held out. Throws std::runtime_error if the loss
// becomes non-finite.
TrainResult train(const TrainConfig& cfg, const FrameDataset& data);

struct DepthSweepRow {
  int depth = 0;
  std::string mode;
  int k = 0;
  int n = 0;
  double omega_final = 0.0;
  double mse_train = 0.0;
  double mse_heldout = 0.0;
  std::uint64_t seed = 0;
};

// Trains every depth with a fixed stepsize and with a learned one started at the
// same ω (taken from the template). All cells share the template seed.
std::vector<DepthSweepRow> sweep_depth(const TrainConfig& tmpl, const FrameDataset& data,
                                       const std::vector<int>& depths, unsigned threads = 1);

void write_depth_sweep_csv(std::ostream& out, const std::vector<DepthSweepRow>& rows);

// ((μ²+θ²)/2)n(1−ω)^{2N} + (σ²/2)(n−k)(1−(1−ω)ᴺ)² for each depth.
std::vector<double> fixed_step_theory_curve(const ModelParams& params, int k, double omega,
                                            const std::vector<int>& depths);

}  // namespace unrollrisk
