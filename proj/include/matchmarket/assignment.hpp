#pragma once

// Exact linear assignment (Jonker-Volgenant style shortest augmenting paths
// with dual potentials, O(n^3)): minimizes sum_i cost(i, sigma(i)) over
// permutations sigma of a square cost matrix.

#include <limits>
#include <vector>

#include "matchmarket/core.hpp"

namespace matchmarket {

// Returns sigma as row -> column. Deterministic: fixed scan order breaks ties.
template <typename Scalar>
std::vector<Index> solve_assignment(const MatrixX<Scalar>& cost) {
  const Index n = cost.rows();
  if (n == 0 || cost.cols() != n)
    throw std::invalid_argument("assignment cost matrix must be square");
  if (!cost.allFinite())
    throw NumericalError("assignment cost matrix contains non-finite values");

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based with a virtual column 0; p[j] = row matched to column j.
  std::vector<Scalar> u(n + 1, Scalar(0)), v(n + 1, Scalar(0)), minv(n + 1);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), char{0});
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      Index j1 = 0;
      Scalar delta = inf;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
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
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> row_to_col(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j)
    row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return row_to_col;
}

template <typename Scalar>
Scalar assignment_cost(const MatrixX<Scalar>& cost,
                       const std::vector<Index>& row_to_col) {
  Scalar total = Scalar(0);
  for (Index i = 0; i < cost.rows(); ++i)
    total += cost(i, row_to_col[static_cast<std::size_t>(i)]);
  return total;
}

}  // namespace matchmarket
