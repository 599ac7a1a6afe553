#pragma once

#include <cstddef>
#include <vector>

namespace topoflow {

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (row-major, size
/// n x n), shortest augmenting paths with potentials. O(n^3).
Assignment solve_assignment(const std::vector<double>& cost, std::size_t n);

}  // namespace topoflow
