#pragma once

#include <Eigen/Dense>
#include <string>

namespace gsn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

inline std::string shape_str(const Matrix& m) { return shape_str(m.rows(), m.cols()); }

}  // namespace gsn
