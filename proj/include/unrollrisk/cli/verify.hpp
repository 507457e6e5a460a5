#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace unrollrisk::cli {

struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  std::size_t required = 0;  // checks that must pass for the suite to pass
  bool passed() const;
};

void to_json(nlohmann::json& j, const SuiteReport& report);

std::vector<std::string> suite_names();

// Throws std::invalid_argument for an unknown suite.
SuiteReport run_suite(const std::string& suite, std::uint64_t seed, unsigned threads = 1);

}  // namespace unrollrisk::cli
