#include "unrollrisk/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/numeric.hpp"
#include "unrollrisk/parallel.hpp"
#include "unrollrisk/rng.hpp"
#include "unrollrisk/unrolled_gradient.hpp"

namespace unrollrisk {

std::string_view mode_name(const StepsizeMode& mode) {
  return std::holds_alternative<FixedStep>(mode) ? "fixed" : "learned";
}

double initial_omega(const StepsizeMode& mode) {
  if (const auto* f = std::get_if<FixedStep>(&mode)) return f->omega;
  return softplus(std::get<LearnedStep>(mode).omega_raw);
}

void TrainConfig::validate() const {
  if (n < 1) throw std::invalid_argument("train: n must be >= 1");
  if (k < 1 || k > n) throw std::invalid_argument("train: k must satisfy 1 <= k <= n");
  if (depth < 1) throw std::invalid_argument("train: depth must be >= 1");
  if (const auto* f = std::get_if<FixedStep>(&stepsize); f && !(f->omega > 0.0))
    throw std::invalid_argument("train: fixed omega must be > 0");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw std::invalid_argument("train: moment decays must lie in [0, 1)");
  if (adam.iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (!(init_scale >= 0.0)) throw std::invalid_argument("train: init scale must be >= 0");
}

namespace {

std::vector<double> read_signal(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  std::vector<double> samples;
  if (ext == ".bin" || ext == ".f64" || ext == ".raw") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 8 != 0) throw IoError(path.string() + ": size is not a multiple of 8 bytes");
    samples.reserve(bytes.size() / 8);
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
      std::uint64_t word = 0;
      for (int b = 7; b >= 0; --b) word = (word << 8) | static_cast<unsigned char>(bytes[i + static_cast<std::size_t>(b)]);
      samples.push_back(std::bit_cast<double>(word));
    }
  } else {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        samples.push_back(parse_double(line));
      } catch (const std::invalid_argument& e) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  for (double v : samples)
    if (!std::isfinite(v)) throw IoError(path.string() + ": non-finite sample");
  return samples;
}

// Noisy copies of the clean frames, drawn row by row from one stream.
Matrix add_noise(const Matrix& clean, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  Matrix noisy = clean;
  for (Eigen::Index i = 0; i < clean.rows(); ++i)
    for (Eigen::Index j = 0; j < clean.cols(); ++j) noisy(i, j) += sigma * rng.normal();
  return noisy;
}

}  // namespace

FrameDataset ingest_frames(const std::filesystem::path& path, int n, std::size_t limit, double noise_sigma) {
  if (n < 1) throw std::invalid_argument("ingest_frames: n must be >= 1");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("ingest_frames: noise sigma must be >= 0");
  const std::vector<double> samples = read_signal(path);
  const auto width = static_cast<std::size_t>(n);
  if (samples.size() < width)
    throw IoError(path.string() + ": " + std::to_string(samples.size()) + " samples, need at least " + std::to_string(n));
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) throw IoError(path.string() + ": signal is identically zero");
  std::size_t frames = samples.size() / width;
  if (limit > 0) frames = std::min(frames, limit);
  Matrix m(static_cast<Eigen::Index>(frames), n);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i * width + j] / peak;
  return FrameDataset{std::move(m), FileSource{path}, noise_sigma};
}

FrameDataset synthetic_frames(const ModelParams& params, std::size_t m, std::uint64_t seed) {
  SampleBatch batch = sample_batch(params, m, seed);
  return FrameDataset{std::move(batch.clean), SyntheticSource{params, seed}, std::sqrt(params.sigma2)};
}

SufficientStats sufficient_stats(const Matrix& clean, const Matrix& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols())
    throw std::invalid_argument("sufficient_stats: shape mismatch");
  if (clean.rows() == 0) throw std::invalid_argument("sufficient_stats: no rows");
  const double inv_m = 1.0 / static_cast<double>(clean.rows());
  SufficientStats s;
  s.m = static_cast<std::size_t>(clean.rows());
  s.xx = inv_m * (noisy.transpose() * noisy);
  s.yx = inv_m * (clean.transpose() * noisy);
  s.yy = inv_m * clean.squaredNorm();
  return s;
}

LossGradient unrolled_loss_gradient(const Matrix& r, double omega, int depth, const SufficientStats& stats) {
  const Matrix t = unrolled_operator(r, omega, depth);
  // ½tr(T Cxx Tᵀ) − tr(T Cyxᵀ) + ½ tr Cyy
  const Matrix t_xx = t * stats.xx;
  const double loss = 0.5 * t_xx.cwiseProduct(t).sum() - t.cwiseProduct(stats.yx).sum() + 0.5 * stats.yy;
  const Matrix d_t = t_xx - stats.yx;
  OperatorGradient g = unrolled_operator_vjp(r, omega, depth, d_t);
  return {loss, std::move(g.d_r), g.d_omega};
}

double empirical_unrolled_loss(const Matrix& r, double omega, int depth, const Matrix& clean, const Matrix& noisy) {
  const Regularizer reg(r);
  const UnrollConfig cfg = UnrollConfig::fixed(depth, omega);
  RunningStats stats;
  for (Eigen::Index i = 0; i < clean.rows(); ++i) {
    const Vector estimate = unroll_gd_iterative(reg, cfg, noisy.row(i).transpose());
    stats.push(0.5 * (estimate - clean.row(i).transpose()).squaredNorm());
  }
  return stats.mean();
}

TrainResult train(const TrainConfig& cfg, const FrameDataset& data) {
  cfg.validate();
  if (data.frames.rows() < 2) throw std::invalid_argument("train: need at least 2 frames");
  if (data.frames.cols() != cfg.n)
    throw std::invalid_argument("train: frame length " + std::to_string(data.frames.cols()) + " != n = " +
                                std::to_string(cfg.n));
  const Eigen::Index m = data.frames.rows();
  const Eigen::Index held = std::max<Eigen::Index>(1, m / 5);
  const Eigen::Index fit = m - held;

  const Matrix noisy = add_noise(data.frames, data.noise_sigma, derive_seed(cfg.seed, 1));
  const Matrix clean_fit = data.frames.topRows(fit);
  const Matrix noisy_fit = noisy.topRows(fit);

  std::vector<SufficientStats> batches;
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  if (batch == 0 || batch >= fit) {
    batches.push_back(sufficient_stats(clean_fit, noisy_fit));
  } else {
    for (Eigen::Index start = 0; start < fit; start += batch) {
      const Eigen::Index rows = std::min(batch, fit - start);
      batches.push_back(sufficient_stats(clean_fit.middleRows(start, rows), noisy_fit.middleRows(start, rows)));
    }
  }

  Rng init(derive_seed(cfg.seed, 2));
  Matrix r(cfg.k, cfg.n);
  const double scale = cfg.init_scale / std::sqrt(static_cast<double>(cfg.n));
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    for (Eigen::Index i = 0; i < r.rows(); ++i) r(i, j) = scale * init.normal();

  const bool learned = std::holds_alternative<LearnedStep>(cfg.stepsize);
  double raw = learned ? std::get<LearnedStep>(cfg.stepsize).omega_raw : 0.0;
  double omega = initial_omega(cfg.stepsize);

  const AdamConfig& adam = cfg.adam;
  Matrix m_r = Matrix::Zero(r.rows(), r.cols());
  Matrix v_r = Matrix::Zero(r.rows(), r.cols());
  double m_w = 0.0;
  double v_w = 0.0;
  double decay1 = 1.0;
  double decay2 = 1.0;

  TrainResult out;
  out.loss_trace.reserve(static_cast<std::size_t>(adam.iterations));
  for (int it = 0; it < adam.iterations; ++it) {
    const SufficientStats& stats = batches[static_cast<std::size_t>(it) % batches.size()];
    LossGradient lg = unrolled_loss_gradient(r, omega, cfg.depth, stats);
    if (!std::isfinite(lg.loss) || !lg.d_r.allFinite() || !std::isfinite(lg.d_omega)) {
      std::ostringstream msg;
      msg << "train: loss diverged at iteration " << it << " (depth " << cfg.depth << ", omega " << omega
          << ", |R|_F " << r.norm() << ")";
      throw std::runtime_error(msg.str());
    }
    out.loss_trace.push_back(lg.loss);
    decay1 *= adam.beta1;
    decay2 *= adam.beta2;
    m_r = adam.beta1 * m_r + (1.0 - adam.beta1) * lg.d_r;
    v_r = adam.beta2 * v_r + (1.0 - adam.beta2) * lg.d_r.cwiseAbs2();
    const Matrix m_hat = m_r / (1.0 - decay1);
    const Matrix v_hat = v_r / (1.0 - decay2);
    r.array() -= adam.learning_rate * m_hat.array() / (v_hat.array().sqrt() + adam.epsilon);
    if (learned) {
      // dω/draw = sigmoid(raw)
      const double d_raw = lg.d_omega / (1.0 + std::exp(-raw));
      m_w = adam.beta1 * m_w + (1.0 - adam.beta1) * d_raw;
      v_w = adam.beta2 * v_w + (1.0 - adam.beta2) * d_raw * d_raw;
      raw -= adam.learning_rate * (m_w / (1.0 - decay1)) / (std::sqrt(v_w / (1.0 - decay2)) + adam.epsilon);
      omega = softplus(raw);
    }
  }

  const Matrix t = unrolled_operator(r, omega, cfg.depth);
  const Matrix residual_fit = noisy_fit * t.transpose() - clean_fit;
  const Matrix residual_held = noisy.bottomRows(held) * t.transpose() - data.frames.bottomRows(held);
  RunningStats fit_stats, held_stats;
  for (Eigen::Index i = 0; i < fit; ++i) fit_stats.push(0.5 * residual_fit.row(i).squaredNorm());
  for (Eigen::Index i = 0; i < held; ++i) held_stats.push(0.5 * residual_held.row(i).squaredNorm());
  if (!std::isfinite(fit_stats.mean()) || !std::isfinite(held_stats.mean()))
    throw std::runtime_error("train: final loss is not finite (depth " + std::to_string(cfg.depth) + ")");

  out.r = std::move(r);
  out.omega = omega;
  out.mse_train = fit_stats.mean();
  out.mse_heldout = held_stats.mean();
  out.heldout_std_error = held_stats.std_error();
  out.train_frames = static_cast<std::size_t>(fit);
  out.heldout_frames = static_cast<std::size_t>(held);
  out.seed = cfg.seed;
  return out;
}

std::vector<DepthSweepRow> sweep_depth(const TrainConfig& tmpl, const FrameDataset& data, const std::vector<int>& depths,
                                       unsigned threads) {
  if (depths.empty()) throw std::invalid_argument("sweep_depth: no depths given");
  const double omega0 = initial_omega(tmpl.stepsize);
  std::vector<DepthSweepRow> rows(depths.size() * 2);
  parallel_for(rows.size(), threads, [&](std::size_t cell) {
    TrainConfig cfg = tmpl;
    cfg.depth = depths[cell / 2];
    if (cell % 2 == 0)
      cfg.stepsize = FixedStep{omega0};
    else
      cfg.stepsize = LearnedStep{softplus_inverse(omega0)};
    const TrainResult res = train(cfg, data);
    rows[cell] = DepthSweepRow{cfg.depth, std::string(mode_name(cfg.stepsize)), cfg.k, cfg.n, res.omega,
                               res.mse_train, res.mse_heldout, cfg.seed};
  });
  return rows;
}

void write_depth_sweep_csv(std::ostream& out, const std::vector<DepthSweepRow>& rows) {
  out << "N,mode,k,n,omega_final,mse_train,mse_heldout,seed\n";
  for (const auto& r : rows) {
    out << r.depth << ',' << r.mode << ',' << r.k << ',' << r.n << ',' << format_double(r.omega_final) << ','
        << format_double(r.mse_train) << ',' << format_double(r.mse_heldout) << ',' << r.seed << '\n';
  }
}

std::vector<double> fixed_step_theory_curve(const ModelParams& params, int k, double omega,
                                            const std::vector<int>& depths) {
  params.validate();
  if (k < 1 || k > params.n) throw std::invalid_argument("theory curve: k out of range");
  const double a = params.mu * params.mu + params.theta2;
  std::vector<double> out;
  out.reserve(depths.size());
  for (int depth : depths) {
    const double q = std::pow(1.0 - omega, depth);
    out.push_back(0.5 * a * params.n * q * q + 0.5 * params.sigma2 * (params.n - k) * (1.0 - q) * (1.0 - q));
  }
  return out;
}

}  // namespace unrollrisk
