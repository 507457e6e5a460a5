#include "unrollrisk/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "unrollrisk/estimators.hpp"
#include "unrollrisk/expressivity.hpp"
#include "unrollrisk/optimal.hpp"
#include "unrollrisk/oracle.hpp"
#include "unrollrisk/parallel.hpp"
#include "unrollrisk/risk.hpp"
#include "unrollrisk/rng.hpp"
#include "unrollrisk/unrolled_gradient.hpp"

namespace unrollrisk::cli {

namespace {

ModelParams random_params(Rng& rng, int n, DataModel kind) {
  ModelParams p;
  p.n = n;
  p.mu = rng.uniform(-1.5, 1.5);
  p.theta2 = rng.uniform(0.0, 1.0);
  p.sigma2 = rng.uniform(0.05, 1.5);
  p.kind = kind;
  return p;
}

Matrix random_matrix(int rows, int cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

using CheckFn = std::function<CheckResult()>;

// Each check gets its own seed so results do not depend on thread count.
SuiteReport run_checks(const std::string& suite, std::uint64_t seed, std::size_t count, std::size_t required,
                       unsigned threads, const std::function<CheckResult(std::size_t, Rng&)>& check) {
  SuiteReport report;
  report.suite = suite;
  report.seed = seed;
  report.required = required;
  report.checks.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    report.checks[i] = check(i, rng);
  });
  return report;
}

SuiteReport mc_risk_suite(std::uint64_t seed, unsigned threads) {
  return run_checks("mc-risk", seed, 50, 47, threads, [&](std::size_t i, Rng& rng) {
    const int n = 1 + static_cast<int>(rng.uniform(0, 5));
    const auto p = random_params(rng, n, i % 2 ? DataModel::Iid : DataModel::RandomConstant);
    const Matrix t = random_matrix(n, n, rng, 0.5);
    const auto mc = mc_risk(t, p, 100000, derive_seed(seed, 1000 + i));
    CheckResult c;
    c.name = "mc-risk/" + std::to_string(i) + "/" + std::string(to_string(p.kind)) + "/n=" + std::to_string(n);
    c.deviation = std::abs(mc.mean - true_risk(t, p).value) / mc.std_error;
    c.tolerance = 3.0;
    c.passed = c.deviation <= c.tolerance;
    return c;
  });
}

struct SmallCase {
  int n, k, depth;
  double omega;
  DataModel kind;
};

std::vector<SmallCase> small_cases() {
  std::vector<SmallCase> cases;
  for (auto kind : {DataModel::RandomConstant, DataModel::Iid})
    for (int n = 1; n <= 3; ++n)
      for (int k = 1; k <= n; ++k)
        for (int depth = 1; depth <= 4; ++depth)
          for (double w : {0.3, 0.9, 1.5}) cases.push_back({n, k, depth, w, kind});
  return cases;
}

SuiteReport unrolling_small_suite(std::uint64_t seed, unsigned threads) {
  const auto cases = small_cases();
  return run_checks("unrolling-optimal-small", seed, cases.size(), cases.size(), threads,
                    [&](std::size_t i, Rng& rng) {
                      const SmallCase& sc = cases[i];
                      const auto p = random_params(rng, sc.n, sc.kind);
                      const auto rep = unrolling_optimal(p, sc.k, sc.depth, sc.omega);
                      const auto oracle =
                          minimize_unrolling_risk(p, sc.k, sc.depth, sc.omega, 20, derive_seed(seed, 5000 + i));
                      CheckResult c;
                      c.name = "unrolling/" + rep.branch + "/n=" + std::to_string(sc.n) + "/k=" +
                               std::to_string(sc.k) + "/N=" + std::to_string(sc.depth);
                      c.deviation = relative(oracle.value, rep.risk);
                      c.tolerance = 1e-4;
                      c.passed = c.deviation <= c.tolerance;
                      return c;
                    });
}

SuiteReport bilevel_small_suite(std::uint64_t seed, unsigned threads) {
  std::vector<std::pair<int, int>> shapes;
  for (int n = 1; n <= 4; ++n)
    for (int k = 1; k <= n; ++k) shapes.emplace_back(n, k);
  // two checks per shape: the explicit R reproduces the formula, and the oracle never beats it
  return run_checks("bilevel-small", seed, 2 * shapes.size(), 2 * shapes.size(), threads, [&](std::size_t i, Rng&) {
    const auto [n, k] = shapes[i / 2];
    Rng rng(derive_seed(seed, 9000 + i / 2));
    auto p = random_params(rng, n, DataModel::Iid);
    p.theta2 = std::max(p.theta2, 0.05);
    const auto rep = bilevel_optimal(p, k);
    CheckResult c;
    const std::string shape = "/iid/n=" + std::to_string(n) + "/k=" + std::to_string(k);
    if (i % 2 == 0) {
      c.name = "bilevel-explicit" + shape;
      c.deviation = relative(true_risk(bilevel_estimator(Regularizer(*rep.regularizer)), p).value, rep.risk);
      c.tolerance = 1e-12;
    } else {
      c.name = "bilevel-oracle" + shape;
      const auto oracle = minimize_bilevel_risk(p, k, 20, derive_seed(seed, 5000 + i));
      c.deviation = std::max(0.0, (rep.risk - oracle.value) / rep.risk);
      c.tolerance = 1e-6;
    }
    c.passed = c.deviation <= c.tolerance;
    return c;
  });
}

SuiteReport membership_suite(std::uint64_t seed, unsigned threads) {
  return run_checks("membership", seed, 100, 100, threads, [&](std::size_t i, Rng& rng) {
    const int n = 1 + static_cast<int>(rng.uniform(0, 12));
    const int k = 1 + static_cast<int>(rng.uniform(0, n));
    const int depth = 1 + static_cast<int>(i % 8);
    const double w = rng.uniform(0.05, 1.95);
    const Regularizer reg(random_matrix(k, n, rng, rng.uniform(0.1, 1.5)));
    const auto bil = membership_bilevel(bilevel_estimator(reg), k);
    const auto unr = membership_unrolling(unroll_estimator(reg, UnrollConfig::fixed(depth, w)), k, depth, w);
    CheckResult c;
    c.name = "closure/n=" + std::to_string(n) + "/k=" + std::to_string(k) + "/N=" + std::to_string(depth);
    c.deviation = static_cast<double>(bil.failures.size() + unr.failures.size());
    c.tolerance = 0.0;
    c.passed = bil.member && unr.member;
    return c;
  });
}

SuiteReport gradient_suite(std::uint64_t seed, unsigned threads) {
  return run_checks("gradient", seed, 20, 20, threads, [&](std::size_t i, Rng& rng) {
    const int n = 1 + static_cast<int>(i % 5);
    const int k = 1 + static_cast<int>(rng.uniform(0, n));
    const int depth = 1 + static_cast<int>(i % 4);
    const double w = rng.uniform(0.2, 1.5);
    const Matrix r = random_matrix(k, n, rng, 0.6);
    const Matrix cot = random_matrix(n, n, rng, 1.0);
    const auto g = unrolled_operator_vjp(r, w, depth, cot);
    auto scalar = [&](const Matrix& rr, double ww) { return unrolled_operator(rr, ww, depth).cwiseProduct(cot).sum(); };
    const double h = 1e-5;
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < n; ++b) {
        Matrix rp = r, rm = r;
        rp(a, b) += h;
        rm(a, b) -= h;
        worst = std::max(worst, rel(g.d_r(a, b), (scalar(rp, w) - scalar(rm, w)) / (2 * h)));
      }
    worst = std::max(worst, rel(g.d_omega, (scalar(r, w + h) - scalar(r, w - h)) / (2 * h)));
    CheckResult c;
    c.name = "vjp/n=" + std::to_string(n) + "/k=" + std::to_string(k) + "/N=" + std::to_string(depth);
    c.deviation = worst;
    c.tolerance = 1e-5;
    c.passed = worst <= c.tolerance;
    return c;
  });
}

SuiteReport c_constant_suite(std::uint64_t seed, unsigned threads) {
  return run_checks("c-constant", seed, 7 * 50, 7 * 50, threads, [&](std::size_t i, Rng&) {
    const int depth = 3 + 2 * static_cast<int>(i / 50);
    const double w = 2.0 * (static_cast<double>(i % 50) + 0.5) / 50.0;
    const auto cb = c_constant(depth, w);
    CheckResult c;
    c.name = "c/N=" + std::to_string(depth) + "/omega=" + std::to_string(w) + "/" + std::string(to_string(cb.branch));
    if (cb.branch == CRegime::Bounds) {
      c.deviation = std::max({0.0, cb.lower - cb.value, cb.value - cb.upper});
      c.tolerance = 0.0;
    } else {
      c.deviation = std::abs(cb.numeric_minimum - cb.value);
      c.tolerance = 1e-12;
    }
    c.passed = c.deviation <= c.tolerance;
    return c;
  });
}

struct Suite {
  const char* name;
  SuiteReport (*run)(std::uint64_t, unsigned);
};

constexpr Suite kSuites[] = {
    {"mc-risk", mc_risk_suite},
    {"unrolling-optimal-small", unrolling_small_suite},
    {"bilevel-small", bilevel_small_suite},
    {"membership", membership_suite},
    {"gradient", gradient_suite},
    {"c-constant", c_constant_suite},
};

}  // namespace

bool SuiteReport::passed() const {
  const auto ok = static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.passed; }));
  return ok >= required;
}

void to_json(nlohmann::json& j, const SuiteReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  std::size_t ok = 0;
  for (const auto& c : report.checks) {
    ok += c.passed;
    checks.push_back({{"name", c.name}, {"deviation", c.deviation}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  }
  j = nlohmann::json{{"suite", report.suite},       {"seed", report.seed},  {"passed", report.passed()},
                     {"checks_passed", ok},         {"checks_total", report.checks.size()},
                     {"checks_required", report.required}, {"checks", checks}};
}

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& s : kSuites) names.emplace_back(s.name);
  return names;
}

SuiteReport run_suite(const std::string& suite, std::uint64_t seed, unsigned threads) {
  for (const auto& s : kSuites)
    if (suite == s.name) return s.run(seed, threads);
  throw std::invalid_argument("unknown verify suite '" + suite + "'");
}

}  // namespace unrollrisk::cli
