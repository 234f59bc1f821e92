#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gif {

/// Minimum-cost perfect matching on a square cost matrix by shortest
/// augmenting paths with dual potentials. Returns col_for_row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace gif
