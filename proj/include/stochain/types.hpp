#pragma once

#include <Eigen/Dense>

namespace stochain {

using Real = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace stochain
