#pragma once

#include <Eigen/Dense>

namespace sdb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace sdb
