// SPDX-License-Identifier: Apache-2.0

#include "care/assignment.hpp"

#include <algorithm>

namespace care {

namespace {

constexpr double kTieEps = 1e-9;

// Classic potentials method on a square cost matrix (minimization).
// Returns row -> col. O(n^3).
std::vector<int> hungarian_min_square(const std::vector<double>& cost, int n) {
  const double kInf = 1e100;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

// Max total similarity over matchings of exactly min(|rows|, |cols|) pairs
// drawn from the given row/column subsets. Pads to square with zero-cost
// dummies; a perfect matching then pins exactly min real pairs.
double best_completion(const SimilarityMatrix& s, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());
  const int n = std::max(nr, nc);
  if (n == 0) return 0.0;
  std::vector<double> cost(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nc; ++j) {
      cost[i * n + j] = -s.at(rows[i], cols[j]);
    }
  }
  const std::vector<int> match = hungarian_min_square(cost, n);
  double total = 0.0;
  for (int i = 0; i < nr; ++i) {
    if (match[i] >= 0 && match[i] < nc) total += s.at(rows[i], cols[match[i]]);
  }
  return total;
}

}  // namespace

Assignment km_assign(const SimilarityMatrix& s) {
  if (s.rows == 0 || s.cols == 0) {
    throw std::invalid_argument("km_assign: matrix must have rows and cols");
  }
  if (s.data.size() != s.rows * s.cols) {
    throw std::invalid_argument("km_assign: data size does not match shape");
  }
  const std::size_t m = std::min(s.rows, s.cols);

  std::vector<int> all_rows(s.rows), all_cols(s.cols);
  for (std::size_t i = 0; i < s.rows; ++i) all_rows[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < s.cols; ++j) all_cols[j] = static_cast<int>(j);
  const double optimum = best_completion(s, all_rows, all_cols);

  // Fix pairs greedily in (row, col) order; a candidate survives when an
  // optimal completion still exists. This makes ties resolve to the
  // lexicographically smallest pair list.
  Assignment out;
  std::vector<char> col_used(s.cols, 0);
  double fixed_sum = 0.0;
  for (std::size_t r = 0; r < s.rows && out.pairs.size() < m; ++r) {
    std::vector<int> rows_rest;
    for (std::size_t i = r + 1; i < s.rows; ++i) rows_rest.push_back(static_cast<int>(i));
    const std::size_t need_after = m - out.pairs.size() - 1;
    bool matched = false;
    for (std::size_t c = 0; c < s.cols && !matched; ++c) {
      if (col_used[c]) continue;
      std::vector<int> cols_rest;
      for (std::size_t j = 0; j < s.cols; ++j) {
        if (!col_used[j] && j != c) cols_rest.push_back(static_cast<int>(j));
      }
      if (std::min(rows_rest.size(), cols_rest.size()) < need_after) continue;
      const double total =
          fixed_sum + s.at(r, c) + best_completion(s, rows_rest, cols_rest);
      if (total >= optimum - kTieEps) {
        out.pairs.emplace_back(r, c);
        col_used[c] = 1;
        fixed_sum += s.at(r, c);
        matched = true;
      }
    }
    // When no column survives, every optimal assignment leaves row r
    // unmatched (only possible with more predictions than ground truth).
  }
  return out;
}

double assignment_total(const SimilarityMatrix& s, const Assignment& a) {
  double total = 0.0;
  for (const auto& [i, j] : a.pairs) total += s.at(i, j);
  return total;
}

}  // namespace care
