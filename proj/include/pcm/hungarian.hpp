#pragma once

#include "pcm/error.hpp"
#include "pcm/types.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace pcm {

struct Assignment {
  std::vector<std::size_t> col_of_row;
  double total = 0;
};

namespace detail {

/// Kuhn-Munkres with row/column potentials, O(m^3). Returns the minimum cost.
inline double solve_assignment(const RowMatrixXd& a, std::vector<std::size_t>* col_of_row) {
  const Index m = a.rows();
  if (m == 0) {
    if (col_of_row) col_of_row->clear();
    return 0;
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(std::size_t(m) + 1, 0.0), v(std::size_t(m) + 1, 0.0);
  std::vector<Index> p(std::size_t(m) + 1, 0), way(std::size_t(m) + 1, 0);
  for (Index i = 1; i <= m; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(std::size_t(m) + 1, inf);
    std::vector<char> used(std::size_t(m) + 1, false);
    do {
      used[std::size_t(j0)] = true;
      const Index i0 = p[std::size_t(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[std::size_t(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
        if (cur < minv[std::size_t(j)]) {
          minv[std::size_t(j)] = cur;
          way[std::size_t(j)] = j0;
        }
        if (minv[std::size_t(j)] < delta) {
          delta = minv[std::size_t(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      const Index j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> rows(std::size_t(m), 0);
  for (Index j = 1; j <= m; ++j) rows[std::size_t(p[std::size_t(j)] - 1)] = std::size_t(j - 1);
  double total = 0;
  for (Index i = 0; i < m; ++i) total += a(i, Index(rows[std::size_t(i)]));
  if (col_of_row) *col_of_row = std::move(rows);
  return total;
}

}  // namespace detail

/// Minimum-cost perfect matching of rows to columns of a square cost matrix.
///
/// Among optimal assignments the lexicographically smallest `col_of_row` is
/// returned: rows are fixed one at a time to the smallest column that still
/// admits an optimal completion. That refinement costs O(m^5) in the worst
/// case, which is fine for the concept-count sized matrices used here.
template <typename Derived>
Assignment hungarian(const Eigen::MatrixBase<Derived>& cost) {
  if (cost.rows() != cost.cols()) throw ValidationError("hungarian: cost matrix must be square");
  const RowMatrixXd a = cost.template cast<double>();
  if (!a.allFinite()) throw ValidationError("hungarian: cost matrix must be finite");
  const Index m = a.rows();

  const double optimum = detail::solve_assignment(a, nullptr);
  const double tol = 1e-9 * (1.0 + a.cwiseAbs().sum());

  Assignment out;
  out.col_of_row.assign(std::size_t(m), 0);
  std::vector<Index> free_cols(static_cast<std::size_t>(m));
  std::iota(free_cols.begin(), free_cols.end(), Index{0});
  double prefix = 0;
  for (Index r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      const Index c = free_cols[k];
      const bool last = k + 1 == free_cols.size();
      bool ok = last;
      if (!ok) {
        RowMatrixXd sub(m - r - 1, m - r - 1);
        for (Index rr = r + 1; rr < m; ++rr) {
          Index cc = 0;
          for (Index col : free_cols)
            if (col != c) sub(rr - r - 1, cc++) = a(rr, col);
        }
        ok = prefix + a(r, c) + detail::solve_assignment(sub, nullptr) <= optimum + tol;
      }
      if (ok) {
        out.col_of_row[std::size_t(r)] = std::size_t(c);
        prefix += a(r, c);
        free_cols.erase(free_cols.begin() + std::ptrdiff_t(k));
        break;
      }
    }
  }
  out.total = prefix;
  return out;
}

}  // namespace pcm
