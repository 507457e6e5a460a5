#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace unrollrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised for unreadable, unwritable or malformed files; other bad input uses std::invalid_argument.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unrollrisk
