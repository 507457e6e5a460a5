#include "unrollrisk/cli/app.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "json_config.hpp"
#include "unrollrisk/cli/sweep.hpp"
#include "unrollrisk/cli/verify.hpp"
#include "unrollrisk/estimators.hpp"
#include "unrollrisk/experiment.hpp"
#include "unrollrisk/expressivity.hpp"
#include "unrollrisk/numeric.hpp"
#include "unrollrisk/optimal.hpp"
#include "unrollrisk/regularizer_io.hpp"

namespace unrollrisk::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = "-";
  std::string format;  // empty: the subcommand's natural format
};

struct ModelOptions {
  std::string model = "const";
  int n = 1;
  double mu = 1.0;
  double theta = 0.0;  // standard deviation
  double sigma = 1.0;  // standard deviation

  ModelParams params() const {
    ModelParams p;
    p.kind = parse_data_model(model);
    p.n = n;
    p.mu = mu;
    p.theta2 = theta * theta;
    p.sigma2 = sigma * sigma;
    p.validate();
    return p;
  }
};

void add_model_options(CLI::App* sub, ModelOptions& m, bool with_n = true) {
  sub->add_option("--model", m.model, "Data model")->check(CLI::IsMember({"const", "iid"}))->capture_default_str();
  if (with_n) sub->add_option("--n", m.n, "Signal length")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--mu", m.mu, "Signal mean")->capture_default_str();
  sub->add_option("--theta", m.theta, "Signal standard deviation")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--sigma", m.sigma, "Noise standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
}

// Expands "a:b" (step 1) and "a:b:step" tokens, inclusive of b.
template <class T>
std::vector<T> expand_axis(const std::vector<std::string>& tokens, const char* axis) {
  std::vector<T> values;
  for (const auto& token : tokens) {
    std::vector<std::string> parts;
    std::stringstream ss(token);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    auto number = [&](const std::string& text) {
      try {
        const double v = parse_double(text);
        if constexpr (std::is_integral_v<T>) {
          if (v != std::floor(v)) throw std::invalid_argument("not an integer");
        }
        return v;
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument(std::string("--") + axis + ": cannot parse '" + token + "'");
      }
    };
    if (parts.size() == 1) {
      values.push_back(static_cast<T>(number(parts[0])));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const double lo = number(parts[0]);
      const double hi = number(parts[1]);
      const double step = parts.size() == 3 ? number(parts[2]) : 1.0;
      if (!(step > 0.0) || hi < lo) throw std::invalid_argument(std::string("--") + axis + ": bad range '" + token + "'");
      const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
      if (count > kMaxSweepCells) throw std::invalid_argument(std::string("--") + axis + ": range too long");
      for (std::size_t i = 0; i < count; ++i) values.push_back(static_cast<T>(lo + static_cast<double>(i) * step));
    } else {
      throw std::invalid_argument(std::string("--") + axis + ": cannot parse '" + token + "'");
    }
  }
  return values;
}

// Flattens scalar members (nested objects joined with '.') into one CSV record.
void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, nlohmann::ordered_json>>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, name, out);
    } else if (!value.is_array()) {
      out.emplace_back(name, nlohmann::ordered_json(value));
    }
  }
}

void emit_object(std::ostream& out, const json& j, const std::string& format) {
  if (format == "csv") {
    std::vector<std::pair<std::string, nlohmann::ordered_json>> fields;
    flatten(j, "", fields);
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i].first;
    out << '\n';
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_cell(fields[i].second);
    out << '\n';
  } else {
    out << j.dump(2) << '\n';
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_result(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out == "-") {
    out << text;
    return;
  }
  std::ofstream file(g.out, std::ios::binary);
  if (!file) throw IoError("cannot write " + g.out);
  file << text;
  if (!file) throw IoError("write failed: " + g.out);
}

// ---- sweep ----

struct SweepOptions {
  std::string quantity;
  std::vector<std::string> models{"const"};
  std::vector<std::string> n{"1"}, mu{"1"}, theta{"0"}, sigma{"1"}, k{"1"}, depth{"2"}, omega{"1"};
  std::string numerator = "linear";
  std::string denominator = "bilevel";
  std::size_t mc_samples = 20000;
};

int cmd_sweep(const SweepOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.quantity = parse_quantity(o.quantity);
  spec.models.clear();
  for (const auto& m : o.models) spec.models.push_back(parse_data_model(m));
  spec.n = expand_axis<int>(o.n, "n");
  spec.mu = expand_axis<double>(o.mu, "mu");
  spec.theta = expand_axis<double>(o.theta, "theta");
  spec.sigma = expand_axis<double>(o.sigma, "sigma");
  spec.k = expand_axis<int>(o.k, "k");
  spec.depth = expand_axis<int>(o.depth, "n-steps");
  spec.omega = expand_axis<double>(o.omega, "omega");
  spec.numerator = parse_ratio_term(o.numerator);
  spec.denominator = parse_ratio_term(o.denominator);
  spec.mc_samples = o.mc_samples;
  spec.seed = g.seed;
  const std::size_t cells = grid_size(spec);
  err << "sweep: " << cells << " grid cells\n";
  const SweepTable table = run_sweep(spec, g.threads);
  if (table.skipped > 0) err << "sweep: skipped " << table.skipped << " cells with k > n\n";
  std::ostringstream text;
  if (g.format == "json") {
    write_json(text, table);
  } else {
    write_csv(text, table);
  }
  write_result(g, out, text.str());
  return kExitOk;
}

// ---- verify ----

int cmd_verify(const std::string& suite, bool list, const Globals& g, std::ostream& out, std::ostream& err) {
  if (list) {
    std::ostringstream text;
    for (const auto& name : suite_names()) text << name << '\n';
    write_result(g, out, text.str());
    return kExitOk;
  }
  if (suite.empty()) throw CLI::RequiredError("--suite");
  const SuiteReport report = run_suite(suite, g.seed, g.threads);
  const json j = report;
  write_result(g, out, j.dump(2) + "\n");
  err << "verify " << suite << ": " << j.at("checks_passed") << "/" << j.at("checks_total") << " checks passed ("
      << report.required << " required)\n";
  return report.passed() ? kExitOk : kExitCheckFailed;
}

// ---- train ----

struct TrainOptions {
  ModelOptions model;
  int k = 1;
  int n = 32;
  int depth = 1;
  std::vector<int> depths;
  double omega = softplus(-2.0);
  bool learn_omega = false;
  double lr = 1e-3;
  int iterations = 2000;
  std::size_t batch_size = 0;
  double init_scale = 1.0;
  std::string input;
  std::size_t limit = 0;
  double noise_sigma = 0.1;
  std::size_t frames = 1000;
  std::string save_r;
  std::string trace;
};

int cmd_train(const TrainOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  FrameDataset data;
  if (!o.input.empty()) {
    data = ingest_frames(o.input, o.n, o.limit, o.noise_sigma);
    err << "train: " << data.frames.rows() << " frames from " << o.input << "\n";
  } else {
    ModelOptions m = o.model;
    m.n = o.n;
    data = synthetic_frames(m.params(), o.frames, derive_seed(g.seed, 100));
  }
  TrainConfig cfg;
  cfg.k = o.k;
  cfg.n = o.n;
  cfg.depth = o.depth;
  if (o.learn_omega) {
    cfg.stepsize = LearnedStep{softplus_inverse(o.omega)};
  } else {
    cfg.stepsize = FixedStep{o.omega};
  }
  cfg.adam.learning_rate = o.lr;
  cfg.adam.iterations = o.iterations;
  cfg.batch_size = o.batch_size;
  cfg.init_scale = o.init_scale;
  cfg.seed = g.seed;
  cfg.validate();

  std::ostringstream text;
  if (!o.depths.empty()) {
    // a depth sweep always runs both stepsize modes, starting from the same ω
    const auto rows = sweep_depth(cfg, data, o.depths, g.threads);
    if (g.format == "json") {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"N", r.depth}, {"mode", r.mode}, {"k", r.k}, {"n", r.n}, {"omega_final", r.omega_final},
                       {"mse_train", r.mse_train}, {"mse_heldout", r.mse_heldout}, {"seed", r.seed}});
      text << arr.dump(2) << '\n';
    } else {
      write_depth_sweep_csv(text, rows);
    }
    write_result(g, out, text.str());
    return kExitOk;
  }

  const TrainResult res = train(cfg, data);
  json j{{"k", cfg.k},
         {"n", cfg.n},
         {"N", cfg.depth},
         {"mode", std::string(mode_name(cfg.stepsize))},
         {"omega_final", res.omega},
         {"mse_train", res.mse_train},
         {"mse_heldout", res.mse_heldout},
         {"heldout_std_error", res.heldout_std_error},
         {"train_frames", res.train_frames},
         {"heldout_frames", res.heldout_frames},
         {"iterations", res.loss_trace.size()},
         {"final_loss", res.loss_trace.empty() ? json(nullptr) : json(res.loss_trace.back())},
         {"seed", res.seed}};
  emit_object(text, j, g.format);
  write_result(g, out, text.str());
  if (!o.save_r.empty()) save_regularizer(o.save_r, Regularizer(res.r));
  if (!o.trace.empty()) {
    std::ofstream t(o.trace);
    if (!t) throw IoError("cannot write " + o.trace);
    t << "iteration,loss\n";
    for (std::size_t i = 0; i < res.loss_trace.size(); ++i) t << i << ',' << format_double(res.loss_trace[i]) << '\n';
    if (!t) throw IoError("write failed: " + o.trace);
  }
  return kExitOk;
}

// ---- landscape ----

struct LandscapeOptions {
  ModelOptions model;
  std::vector<int> depths;
  double omega = 0.1;
  double r_max = 8.0;
  std::size_t points = 1000;
};

int cmd_landscape(const LandscapeOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  ModelOptions m = o.model;
  m.n = 1;
  const ModelParams p = m.params();
  if (o.points < 2) throw std::invalid_argument("--points must be >= 2");
  if (!(o.r_max > 0.0)) throw std::invalid_argument("--r-max must be > 0");
  std::vector<double> grid(o.points);
  for (std::size_t i = 0; i < o.points; ++i) grid[i] = o.r_max * static_cast<double>(i) / static_cast<double>(o.points - 1);
  SweepTable table;
  table.quantity = "landscape";
  table.columns = {"N", "r", "risk"};
  for (int depth : o.depths) {
    const auto risk = scalar_landscape(depth, o.omega, p, grid);
    std::vector<double> minima;
    for (std::size_t i = 0; i < risk.size(); ++i) {
      nlohmann::ordered_json row;
      row["N"] = depth;
      row["r"] = grid[i];
      row["risk"] = risk[i];
      table.rows.push_back(std::move(row));
      const bool left = i == 0 || risk[i] < risk[i - 1];
      const bool right = i + 1 == risk.size() || risk[i] < risk[i + 1];
      if (left && right) minima.push_back(grid[i]);
    }
    err << "landscape N=" << depth << ": " << minima.size() << " local minima at r =";
    for (double r : minima) err << ' ' << format_double(r);
    err << '\n';
  }
  std::ostringstream text;
  if (g.format == "json") {
    write_json(text, table);
  } else {
    write_csv(text, table);
  }
  write_result(g, out, text.str());
  return kExitOk;
}

// ---- c-constant ----

int cmd_c_constant(int depth, double omega, const Globals& g, std::ostream& out) {
  const CnBounds c = c_constant(depth, omega);
  const json j{{"N", depth},
               {"omega", omega},
               {"branch", std::string(to_string(c.branch))},
               {"lower", c.lower},
               {"upper", c.upper},
               {"value", c.value},
               {"numeric_minimum", c.numeric_minimum},
               {"certified", c.certified},
               {"rho", rho(depth, omega)},
               {"regime_product", regime_product(depth, omega)}};
  std::ostringstream text;
  emit_object(text, j, g.format);
  write_result(g, out, text.str());
  return kExitOk;
}

// ---- best-risk / optimal-omega ----

struct RiskOptions {
  ModelOptions model;
  std::string estimator_class = "unrolling";
  int k = 1;
  int depth = 2;
  double omega = 1.0;
  std::string regularizer_out;
};

int cmd_best_risk(const RiskOptions& o, const Globals& g, std::ostream& out) {
  const ModelParams p = o.model.params();
  OptimalRiskReport rep;
  if (o.estimator_class == "linear") {
    rep = best_linear(p);
  } else if (o.estimator_class == "bilevel") {
    rep = bilevel_optimal(p, o.k);
  } else {
    rep = unrolling_optimal(p, o.k, o.depth, o.omega);
  }
  json j = rep;
  j["class"] = o.estimator_class;
  j["params"] = p;
  if (o.estimator_class != "linear") j["k"] = o.k;
  if (o.estimator_class == "unrolling") {
    j["N"] = o.depth;
    j["omega"] = o.omega;
  }
  if (rep.estimator) j["estimator"] = matrix_json(rep.estimator->matrix());
  if (rep.regularizer) j["regularizer"] = matrix_json(*rep.regularizer);
  std::ostringstream text;
  emit_object(text, j, g.format);
  write_result(g, out, text.str());
  if (!o.regularizer_out.empty()) {
    if (!rep.regularizer) throw std::invalid_argument("no closed-form regularizer for this report");
    save_regularizer(o.regularizer_out, Regularizer(*rep.regularizer));
  }
  return kExitOk;
}

int cmd_optimal_omega(const RiskOptions& o, const Globals& g, std::ostream& out) {
  const ModelParams p = o.model.params();
  const auto rep = optimal_omega(p, o.k, o.depth);
  json j = rep;
  j["params"] = p;
  j["k"] = o.k;
  j["N"] = o.depth;
  std::ostringstream text;
  emit_object(text, j, g.format);
  write_result(g, out, text.str());
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk formulas, oracles and training for unrolled and bilevel linear denoisers", "unrollrisk"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Root random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output file ('-' for stdout)")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a quantity over a parameter grid");
  sweep_cmd->add_option("--quantity", sweep.quantity, "best-linear | bilevel | unrolling | optimal-omega | risk-ratio | mc-check")
      ->required();
  sweep_cmd->add_option("--model", sweep.models, "Data models")->check(CLI::IsMember({"const", "iid"}));
  sweep_cmd->add_option("--n", sweep.n, "Signal lengths (values or a:b[:step])");
  sweep_cmd->add_option("--mu", sweep.mu, "Signal means");
  sweep_cmd->add_option("--theta", sweep.theta, "Signal standard deviations");
  sweep_cmd->add_option("--sigma", sweep.sigma, "Noise standard deviations");
  sweep_cmd->add_option("--k", sweep.k, "Regularizer row counts");
  sweep_cmd->add_option("--n-steps", sweep.depth, "Unrolling depths");
  sweep_cmd->add_option("--omega", sweep.omega, "Stepsizes in (0, 2)");
  sweep_cmd->add_option("--numerator", sweep.numerator, "Ratio numerator: linear | bilevel | unrolling | unrolling-opt")
      ->capture_default_str();
  sweep_cmd->add_option("--denominator", sweep.denominator, "Ratio denominator")->capture_default_str();
  sweep_cmd->add_option("--mc-samples", sweep.mc_samples, "Samples per mc-check cell")->capture_default_str();

  std::string suite;
  bool list_suites = false;
  auto* verify_cmd = app.add_subcommand("verify", "Run an oracle check suite");
  verify_cmd->add_option("suite,--suite", suite, "Suite name");
  verify_cmd->add_flag("--list", list_suites, "List suites");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a regularizer through the unrolled iterations");
  add_model_options(train_cmd, tr.model, false);
  train_cmd->add_option("--k", tr.k, "Regularizer rows")->capture_default_str();
  train_cmd->add_option("--n", tr.n, "Frame length")->capture_default_str();
  auto* depth_opt = train_cmd->add_option("--n-steps", tr.depth, "Unrolling depth")->capture_default_str();
  train_cmd->add_option("--depths", tr.depths, "Depth sweep (fixed and learned stepsize per depth)")->excludes(depth_opt);
  train_cmd->add_option("--omega", tr.omega, "Stepsize (initial value when learned)")->capture_default_str();
  train_cmd->add_flag("--learn-omega", tr.learn_omega, "Learn the stepsize through softplus");
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--iterations", tr.iterations, "Adam steps")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size, "Frames per step (0 = full batch)")->capture_default_str();
  train_cmd->add_option("--init-scale", tr.init_scale, "R init scale")->capture_default_str();
  train_cmd->add_option("--input", tr.input, "Signal file (CSV or little-endian f64); synthetic data if absent");
  train_cmd->add_option("--limit", tr.limit, "Maximum frames read from --input (0 = all)")->capture_default_str();
  train_cmd->add_option("--noise-sigma", tr.noise_sigma, "Noise standard deviation for --input data")->capture_default_str();
  train_cmd->add_option("--frames", tr.frames, "Synthetic frame count")->capture_default_str();
  train_cmd->add_option("--save-r", tr.save_r, "Write the learned regularizer (.bin = binary, else CSV)");
  train_cmd->add_option("--trace", tr.trace, "Write the loss trace as CSV");

  LandscapeOptions ls;
  auto* land_cmd = app.add_subcommand("landscape", "Scalar risk landscape over r for n = k = 1");
  add_model_options(land_cmd, ls.model, false);
  land_cmd->add_option("--n-steps", ls.depths, "Unrolling depths")->required();
  land_cmd->add_option("--omega", ls.omega, "Stepsize")->capture_default_str();
  land_cmd->add_option("--r-max", ls.r_max, "Right end of the r grid")->capture_default_str();
  land_cmd->add_option("--points", ls.points, "Grid points")->capture_default_str();

  int c_depth = 0;
  double c_omega = 0.0;
  auto* c_cmd = app.add_subcommand("c-constant", "Spectral floor of odd-depth unrolling");
  c_cmd->add_option("--n-steps", c_depth, "Odd depth")->required();
  c_cmd->add_option("--omega", c_omega, "Stepsize in (0, 2)")->required();

  RiskOptions br;
  auto* best_cmd = app.add_subcommand("best-risk", "Optimal risk of an estimator class");
  add_model_options(best_cmd, br.model);
  best_cmd->add_option("--class", br.estimator_class, "Estimator class")
      ->check(CLI::IsMember({"linear", "bilevel", "unrolling"}))
      ->capture_default_str();
  best_cmd->add_option("--k", br.k, "Regularizer rows")->capture_default_str();
  best_cmd->add_option("--n-steps", br.depth, "Unrolling depth")->capture_default_str();
  best_cmd->add_option("--omega", br.omega, "Stepsize in (0, 2)")->capture_default_str();
  best_cmd->add_option("--regularizer-out", br.regularizer_out, "Write the closed-form regularizer");

  RiskOptions oo;
  auto* omega_cmd = app.add_subcommand("optimal-omega", "Optimal stepsize of the unrolling class");
  add_model_options(omega_cmd, oo.model);
  omega_cmd->add_option("--k", oo.k, "Regularizer rows")->capture_default_str();
  omega_cmd->add_option("--n-steps", oo.depth, "Unrolling depth")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    if (*sweep_cmd) return cmd_sweep(sweep, g, out, err);
    if (*verify_cmd) return cmd_verify(suite, list_suites, g, out, err);
    if (*train_cmd) return cmd_train(tr, g, out, err);
    if (*land_cmd) return cmd_landscape(ls, g, out, err);
    if (*c_cmd) return cmd_c_constant(c_depth, c_omega, g, out);
    if (*best_cmd) return cmd_best_risk(br, g, out);
    if (*omega_cmd) return cmd_optimal_omega(oo, g, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace unrollrisk::cli
