// SPDX-License-Identifier: Apache-2.0
//
// Similarity-maximizing bipartite assignment of size min(rows, cols).
// Deterministic: among equal-total optima the lexicographically smallest
// pair list (sorted by row, then column) is returned.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace care {

struct SimilarityMatrix {
  std::size_t rows = 0;  // predictions
  std::size_t cols = 0;  // ground truth
  std::vector<double> data;  // row-major

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

struct Assignment {
  // (prediction index, ground-truth index), sorted by prediction index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// Throws std::invalid_argument when the matrix is empty or ragged.
Assignment km_assign(const SimilarityMatrix& s);

// Total similarity along an assignment, summed in pair order.
double assignment_total(const SimilarityMatrix& s, const Assignment& a);

}  // namespace care
