#include "unrollrisk/cli/sweep.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "unrollrisk/numeric.hpp"
#include "unrollrisk/optimal.hpp"
#include "unrollrisk/parallel.hpp"
#include "unrollrisk/risk.hpp"
#include "unrollrisk/rng.hpp"

namespace unrollrisk::cli {

namespace {

using nlohmann::ordered_json;

bool uses_term(const SweepSpec& s, RatioTerm t) { return s.numerator == t || s.denominator == t; }

bool uses_k(const SweepSpec& s) { return s.quantity != SweepQuantity::BestLinear; }

bool uses_depth(const SweepSpec& s) {
  switch (s.quantity) {
    case SweepQuantity::Unrolling:
    case SweepQuantity::OptimalOmega:
    case SweepQuantity::McCheck:
      return true;
    case SweepQuantity::RiskRatio:
      return uses_term(s, RatioTerm::Unrolling) || uses_term(s, RatioTerm::UnrollingOpt);
    default:
      return false;
  }
}

bool uses_omega(const SweepSpec& s) {
  return s.quantity == SweepQuantity::Unrolling || s.quantity == SweepQuantity::McCheck ||
         (s.quantity == SweepQuantity::RiskRatio && uses_term(s, RatioTerm::Unrolling));
}

// Mixed-radix axis sizes, outermost first.
std::vector<std::size_t> axis_sizes(const SweepSpec& s) {
  std::vector<std::size_t> sizes{s.models.size(), s.n.size(), s.mu.size(), s.theta.size(), s.sigma.size()};
  sizes.push_back(uses_k(s) ? s.k.size() : 1);
  sizes.push_back(uses_depth(s) ? s.depth.size() : 1);
  sizes.push_back(uses_omega(s) ? s.omega.size() : 1);
  return sizes;
}

struct Cell {
  std::size_t index = 0;
  ModelParams params;
  double theta = 0.0;
  double sigma = 0.0;
  int k = 1;
  int depth = 1;
  double omega = 1.0;
};

Cell decode(const SweepSpec& s, const std::vector<std::size_t>& sizes, std::size_t index) {
  std::vector<std::size_t> at(sizes.size());
  std::size_t rest = index;
  for (std::size_t a = sizes.size(); a-- > 0;) {
    at[a] = rest % sizes[a];
    rest /= sizes[a];
  }
  Cell c;
  c.index = index;
  c.params.kind = s.models[at[0]];
  c.params.n = s.n[at[1]];
  c.params.mu = s.mu[at[2]];
  c.theta = s.theta[at[3]];
  c.sigma = s.sigma[at[4]];
  c.params.theta2 = c.theta * c.theta;
  c.params.sigma2 = c.sigma * c.sigma;
  c.k = uses_k(s) ? s.k[at[5]] : 1;
  c.depth = uses_depth(s) ? s.depth[at[6]] : 1;
  c.omega = uses_omega(s) ? s.omega[at[7]] : 1.0;
  return c;
}

std::vector<std::string> columns_for(const SweepSpec& s) {
  std::vector<std::string> cols{"model", "n", "mu", "theta", "sigma"};
  if (uses_k(s)) cols.emplace_back("k");
  if (uses_depth(s)) cols.emplace_back("N");
  if (uses_omega(s)) cols.emplace_back("omega");
  std::vector<std::string> extra;
  switch (s.quantity) {
    case SweepQuantity::BestLinear: extra = {"risk", "branch"}; break;
    case SweepQuantity::Bilevel: extra = {"risk", "attained", "branch"}; break;
    case SweepQuantity::Unrolling: extra = {"risk", "branch", "rho", "c"}; break;
    case SweepQuantity::OptimalOmega:
      extra = {"shape", "omega_lower", "omega_upper", "risk", "method", "branch"};
      break;
    case SweepQuantity::RiskRatio:
      extra = {"numerator", "denominator", "numerator_risk", "denominator_risk", "ratio"};
      break;
    case SweepQuantity::McCheck:
      extra = {"closed_form", "mc_mean", "mc_std_error", "samples", "seed", "within_3se"};
      break;
  }
  cols.insert(cols.end(), extra.begin(), extra.end());
  return cols;
}

double term_risk(RatioTerm term, const Cell& c) {
  switch (term) {
    case RatioTerm::Linear: return best_linear(c.params).risk;
    case RatioTerm::Bilevel: return bilevel_optimal(c.params, c.k).risk;
    case RatioTerm::Unrolling: return unrolling_optimal(c.params, c.k, c.depth, c.omega).risk;
    case RatioTerm::UnrollingOpt: return optimal_omega(c.params, c.k, c.depth).risk;
  }
  throw std::logic_error("unreachable ratio term");
}

ordered_json evaluate(const SweepSpec& s, const Cell& c) {
  ordered_json row;
  row["model"] = std::string(to_string(c.params.kind));
  row["n"] = c.params.n;
  row["mu"] = c.params.mu;
  row["theta"] = c.theta;
  row["sigma"] = c.sigma;
  if (uses_k(s)) row["k"] = c.k;
  if (uses_depth(s)) row["N"] = c.depth;
  if (uses_omega(s)) row["omega"] = c.omega;
  switch (s.quantity) {
    case SweepQuantity::BestLinear: {
      const auto rep = best_linear(c.params);
      row["risk"] = rep.risk;
      row["branch"] = rep.branch;
      break;
    }
    case SweepQuantity::Bilevel: {
      const auto rep = bilevel_optimal(c.params, c.k);
      row["risk"] = rep.risk;
      row["attained"] = rep.attained;
      row["branch"] = rep.branch;
      break;
    }
    case SweepQuantity::Unrolling: {
      const auto rep = unrolling_optimal(c.params, c.k, c.depth, c.omega);
      row["risk"] = rep.risk;
      row["branch"] = rep.branch;
      row["rho"] = *rep.constants.rho;
      row["c"] = rep.constants.floor ? ordered_json(*rep.constants.floor) : ordered_json(nullptr);
      break;
    }
    case SweepQuantity::OptimalOmega: {
      const auto rep = optimal_omega(c.params, c.k, c.depth);
      row["shape"] = std::string(to_string(rep.shape));
      row["omega_lower"] = rep.lower;
      row["omega_upper"] = rep.upper;
      row["risk"] = rep.risk;
      row["method"] = std::string(to_string(rep.method));
      row["branch"] = rep.branch;
      break;
    }
    case SweepQuantity::RiskRatio: {
      const RiskValue num{term_risk(s.numerator, c), c.params.kind};
      const RiskValue den{term_risk(s.denominator, c), c.params.kind};
      row["numerator"] = std::string(to_string(s.numerator));
      row["denominator"] = std::string(to_string(s.denominator));
      row["numerator_risk"] = num.value;
      row["denominator_risk"] = den.value;
      row["ratio"] = risk_ratio(num, den);
      break;
    }
    case SweepQuantity::McCheck: {
      const auto rep = unrolling_optimal(c.params, c.k, c.depth, c.omega);
      const std::uint64_t seed = derive_seed(s.seed, c.index);
      const auto mc = mc_risk(*rep.estimator, c.params, s.mc_samples, seed);
      row["closed_form"] = rep.risk;
      row["mc_mean"] = mc.mean;
      row["mc_std_error"] = mc.std_error;
      row["samples"] = mc.m;
      row["seed"] = seed;
      row["within_3se"] = std::abs(mc.mean - rep.risk) <= 3.0 * mc.std_error;
      break;
    }
  }
  return row;
}

void validate(const SweepSpec& s) {
  auto nonempty = [](std::size_t size, const char* axis) {
    if (size == 0) throw std::invalid_argument(std::string("sweep: axis '") + axis + "' is empty");
  };
  nonempty(s.models.size(), "model");
  nonempty(s.n.size(), "n");
  nonempty(s.mu.size(), "mu");
  nonempty(s.theta.size(), "theta");
  nonempty(s.sigma.size(), "sigma");
  if (uses_k(s)) nonempty(s.k.size(), "k");
  if (uses_depth(s)) nonempty(s.depth.size(), "N");
  if (uses_omega(s)) nonempty(s.omega.size(), "omega");
  for (int n : s.n)
    if (n < 1) throw std::invalid_argument("sweep: n must be >= 1");
  for (double v : s.sigma)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("sweep: sigma must be positive and finite");
  for (double v : s.theta)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("sweep: theta must be >= 0 and finite");
  if (uses_k(s))
    for (int k : s.k)
      if (k < 1) throw std::invalid_argument("sweep: k must be >= 1");
  if (uses_depth(s))
    for (int d : s.depth)
      if (d < 1) throw std::invalid_argument("sweep: N must be >= 1");
  if (uses_omega(s))
    for (double w : s.omega)
      if (!(w > 0.0 && w < 2.0)) throw std::invalid_argument("sweep: omega must lie in (0, 2)");
  if (s.quantity == SweepQuantity::McCheck && s.mc_samples < 2)
    throw std::invalid_argument("sweep: mc samples must be >= 2");
}

}  // namespace

std::string_view to_string(SweepQuantity q) {
  switch (q) {
    case SweepQuantity::BestLinear: return "best-linear";
    case SweepQuantity::Bilevel: return "bilevel";
    case SweepQuantity::Unrolling: return "unrolling";
    case SweepQuantity::OptimalOmega: return "optimal-omega";
    case SweepQuantity::RiskRatio: return "risk-ratio";
    case SweepQuantity::McCheck: return "mc-check";
  }
  return "?";
}

SweepQuantity parse_quantity(std::string_view name) {
  for (auto q : {SweepQuantity::BestLinear, SweepQuantity::Bilevel, SweepQuantity::Unrolling,
                 SweepQuantity::OptimalOmega, SweepQuantity::RiskRatio, SweepQuantity::McCheck})
    if (to_string(q) == name) return q;
  throw std::invalid_argument("unknown sweep quantity '" + std::string(name) + "'");
}

std::string_view to_string(RatioTerm term) {
  switch (term) {
    case RatioTerm::Linear: return "linear";
    case RatioTerm::Bilevel: return "bilevel";
    case RatioTerm::Unrolling: return "unrolling";
    case RatioTerm::UnrollingOpt: return "unrolling-opt";
  }
  return "?";
}

RatioTerm parse_ratio_term(std::string_view name) {
  for (auto t : {RatioTerm::Linear, RatioTerm::Bilevel, RatioTerm::Unrolling, RatioTerm::UnrollingOpt})
    if (to_string(t) == name) return t;
  throw std::invalid_argument("unknown ratio term '" + std::string(name) + "'");
}

std::size_t grid_size(const SweepSpec& spec) {
  std::size_t total = 1;
  for (std::size_t size : axis_sizes(spec)) {
    if (size != 0 && total > std::numeric_limits<std::size_t>::max() / size)
      return std::numeric_limits<std::size_t>::max();
    total *= size;
  }
  return total;
}

SweepTable run_sweep(const SweepSpec& spec, unsigned threads) {
  validate(spec);
  const std::size_t total = grid_size(spec);
  if (total > kMaxSweepCells)
    throw std::invalid_argument("sweep: " + std::to_string(total) + " cells exceeds the cap of " +
                                std::to_string(kMaxSweepCells));
  const auto sizes = axis_sizes(spec);
  std::vector<Cell> cells;
  cells.reserve(total);
  SweepTable table;
  table.quantity = std::string(to_string(spec.quantity));
  table.columns = columns_for(spec);
  for (std::size_t i = 0; i < total; ++i) {
    Cell c = decode(spec, sizes, i);
    if (c.k > c.params.n) {
      ++table.skipped;
      continue;
    }
    cells.push_back(c);
  }
  table.rows.resize(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) { table.rows[i] = evaluate(spec, cells[i]); });
  return table;
}

std::string csv_cell(const nlohmann::ordered_json& value) {
  if (value.is_null()) return "";
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_float()) return format_double(value.get<double>());
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    return quoted + "\"";
  }
  throw std::invalid_argument("csv_cell: nested values have no CSV form");
}

void write_csv(std::ostream& out, const SweepTable& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_cell(row.at(table.columns[i]));
    out << '\n';
  }
}

void write_json(std::ostream& out, const SweepTable& table) {
  nlohmann::ordered_json doc;
  doc["quantity"] = table.quantity;
  doc["columns"] = table.columns;
  doc["skipped"] = table.skipped;
  doc["rows"] = table.rows;
  out << doc.dump(2) << '\n';
}

}  // namespace unrollrisk::cli
