#include "unrollrisk/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace unrollrisk {

double geometric_sum(double r, int depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  double acc = 1.0;
  for (int j = 1; j < depth; ++j) acc = 1.0 + r * acc;
  return acc;
}

double transfer_f(double s, int depth, double omega) {
  if (!(s >= 0.0)) throw std::invalid_argument("transfer_f: s must be >= 0");
  return omega * geometric_sum(1.0 - omega * (1.0 + s), depth);
}

double rho(int depth, double omega) {
  if (depth < 1) throw std::invalid_argument("rho: depth must be >= 1");
  return 1.0 - std::pow(1.0 - omega, depth);
}

}  // namespace unrollrisk
