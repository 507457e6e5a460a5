#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace unrollrisk {

// SplitMix64 finalizer; used to derive independent stream seeds from a root seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// mt19937_64 engine with Boost's normal distribution (its output is specified
// by the Boost implementation, unlike std::normal_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }
  double uniform(double lo, double hi);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace unrollrisk
