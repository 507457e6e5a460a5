#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace unrollrisk {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
};

// Golden-section search on [lo, hi]; stops when the bracket is narrower than tol.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol);

// Uniform grid over [lo, hi] (endpoints included), then golden refinement around the best node.
ScalarMinimum grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                               std::size_t grid_points, double tol);

// One-pass mean/variance accumulator (Welford), mergeable across shards.
class RunningStats {
 public:
  void push(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double sample_variance() const;
  double std_error() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace unrollrisk
