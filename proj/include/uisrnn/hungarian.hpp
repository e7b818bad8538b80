#pragma once

#include <limits>
#include <vector>

namespace uisrnn {

// Kuhn-Munkres on a square cost matrix (potentials formulation, O(n^3)).
// Returns assignment[row] = column minimizing the total cost.
inline std::vector<int> hungarian_min_cost(
    const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1) assignment[p[j] - 1] = j - 1;
  return assignment;
}

// Maximum-weight injective assignment of rows to columns. The weight matrix
// may be rectangular; unmatched rows get -1.
inline std::vector<int> assign_max_weight(
    const std::vector<std::vector<double>>& weight) {
  const int rows = static_cast<int>(weight.size());
  const int cols = rows > 0 ? static_cast<int>(weight[0].size()) : 0;
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) cost[i][j] = -weight[i][j];
  auto assignment = hungarian_min_cost(cost);
  assignment.resize(rows);
  for (int i = 0; i < rows; ++i)
    if (assignment[i] >= cols) assignment[i] = -1;
  return assignment;
}

}  // namespace uisrnn
