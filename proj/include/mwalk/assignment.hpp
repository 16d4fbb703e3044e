#pragma once

#include <vector>

namespace mwalk {

// Minimum-cost perfect matching on a dense square cost matrix
// (Jonker-Volgenant shortest augmenting path, O(n^3)). cost[i][j] is the cost
// of assigning row i to column j; returns the column assigned to each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const std::vector<int>& row_to_col);

}  // namespace mwalk
