#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace mtl {

// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class TaskKind { classification, regression };

// Raised when training or evaluation produces a non-finite value.
// Input and configuration problems use std::invalid_argument / std::out_of_range.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtl
