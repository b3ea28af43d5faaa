#include "ccus/assignment.hpp"

#include <limits>
#include <vector>

namespace ccus {

double assignment_cost(const Matrix& cost, const Permutation& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    total += cost(static_cast<Index>(i), p[i]);
  return total;
}

Permutation solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) fail_data("assignment cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual source
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Permutation p(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) p[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return p;
}

Permutation solve_assignment_exhaustive(const Matrix& cost) {
  if (cost.rows() != cost.cols()) fail_data("assignment cost matrix must be square");
  Permutation best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& p : all_permutations(static_cast<int>(cost.rows()))) {
    const double c = assignment_cost(cost, p);
    if (c < best_cost) {
      best_cost = c;
      best = p;
    }
  }
  return best;
}

}  // namespace ccus
