#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "unrollrisk/model.hpp"

namespace unrollrisk::cli {

enum class SweepQuantity { BestLinear, Bilevel, Unrolling, OptimalOmega, RiskRatio, McCheck };
std::string_view to_string(SweepQuantity q);
SweepQuantity parse_quantity(std::string_view name);

// Terms a risk ratio can compare. "unrolling-opt" is the even/odd unrolling risk at its optimal ω.
enum class RatioTerm { Linear, Bilevel, Unrolling, UnrollingOpt };
std::string_view to_string(RatioTerm term);
RatioTerm parse_ratio_term(std::string_view name);

inline constexpr std::size_t kMaxSweepCells = 1'000'000;

// Axis values. theta and sigma are standard deviations. Axes the quantity does
// not use are ignored.
struct SweepSpec {
  SweepQuantity quantity = SweepQuantity::BestLinear;
  std::vector<DataModel> models{DataModel::RandomConstant};
  std::vector<int> n{1};
  std::vector<double> mu{1.0};
  std::vector<double> theta{0.0};
  std::vector<double> sigma{1.0};
  std::vector<int> k{1};
  std::vector<int> depth{2};
  std::vector<double> omega{1.0};
  RatioTerm numerator = RatioTerm::Linear;
  RatioTerm denominator = RatioTerm::Bilevel;
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 0;
};

// Size of the cross product over the axes used by spec.quantity (before k > n cells are dropped).
std::size_t grid_size(const SweepSpec& spec);

struct SweepTable {
  std::string quantity;
  std::vector<std::string> columns;
  std::vector<nlohmann::ordered_json> rows;  // one object per kept cell, keys == columns
  std::size_t skipped = 0;                   // cells with k > n
};

// Throws std::invalid_argument for empty axes, invalid values, or more than kMaxSweepCells cells.
SweepTable run_sweep(const SweepSpec& spec, unsigned threads = 1);

void write_csv(std::ostream& out, const SweepTable& table);
void write_json(std::ostream& out, const SweepTable& table);

// Scalar → CSV cell: shortest round-trip numbers, integers without a decimal point.
std::string csv_cell(const nlohmann::ordered_json& value);

}  // namespace unrollrisk::cli
