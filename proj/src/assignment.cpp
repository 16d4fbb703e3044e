#include "mwalk/assignment.hpp"

#include <limits>

#include "mwalk/errors.hpp"

namespace mwalk {

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != n) {
            throw ConfigError("solve_assignment: cost matrix must be square");
        }
    }
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Shortest augmenting path with potentials (1-based internal indexing).
    std::vector<double> row_potential(n + 1, 0.0), col_potential(n + 1, 0.0);
    std::vector<int> col_match(n + 1, 0);  // col -> row
    std::vector<int> path(n + 1, 0);

    for (int row = 1; row <= n; ++row) {
        col_match[0] = row;
        int j0 = 0;
        std::vector<double> min_value(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = col_match[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double reduced =
                    cost[i0 - 1][j - 1] - row_potential[i0] - col_potential[j];
                if (reduced < min_value[j]) {
                    min_value[j] = reduced;
                    path[j] = j0;
                }
                if (min_value[j] < delta) {
                    delta = min_value[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    row_potential[col_match[j]] += delta;
                    col_potential[j] -= delta;
                } else {
                    min_value[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_match[j0] != 0);
        do {
            const int j1 = path[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (col_match[j] > 0) row_to_col[col_match[j] - 1] = j - 1;
    }
    return row_to_col;
}

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const std::vector<int>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        total += cost[i][static_cast<std::size_t>(row_to_col[i])];
    }
    return total;
}

}  // namespace mwalk
