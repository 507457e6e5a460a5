#include "unrollrisk/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace unrollrisk {

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol) {
  if (!(lo <= hi)) throw std::invalid_argument("golden_section_minimize: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    // floating point can stall the bracket once it reaches a few ulps
    if (c >= d) break;
  }
  ScalarMinimum best{c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

ScalarMinimum grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                               std::size_t grid_points, double tol) {
  if (grid_points < 2) throw std::invalid_argument("grid_then_golden: need at least 2 grid points");
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best_i = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = (i + 1 == grid_points) ? hi : lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  const double best_x = (best_i + 1 == grid_points) ? hi : lo + step * static_cast<double>(best_i);
  ScalarMinimum best{best_x, best_v};
  const double a = best_i == 0 ? lo : lo + step * static_cast<double>(best_i - 1);
  const double b = best_i + 1 >= grid_points ? hi : std::min(hi, lo + step * static_cast<double>(best_i + 1));
  const ScalarMinimum refined = golden_section_minimize(f, a, b, tol);
  if (refined.value < best.value) best = refined;
  return best;
}

void RunningStats::push(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n_a = static_cast<double>(count_);
  const double n_b = static_cast<double>(other.count_);
  const double total = n_a + n_b;
  const double delta = other.mean_ - mean_;
  mean_ += delta * n_b / total;
  m2_ += other.m2_ + delta * delta * n_a * n_b / total;
  count_ += other.count_;
}

double RunningStats::sample_variance() const {
  if (count_ < 2) return 0.0;
  return m2_ / static_cast<double>(count_ - 1);
}

double RunningStats::std_error() const {
  if (count_ < 2) return 0.0;
  return std::sqrt(sample_variance() / static_cast<double>(count_));
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

}  // namespace unrollrisk
