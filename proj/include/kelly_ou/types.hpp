#pragma once

#include <Eigen/Dense>

namespace kelly_ou {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace kelly_ou
