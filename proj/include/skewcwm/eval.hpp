#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace skewcwm {

/// Contingency table of two labelings. Rows follow the sorted distinct labels
/// of the first argument, columns those of the second.
struct Contingency {
  std::vector<int> row_labels;
  std::vector<int> col_labels;
  Eigen::MatrixXi counts;
};

Contingency confusion(std::span<const int> a, std::span<const int> b);

/// Hubert-Arabie adjusted Rand index. When the index is undefined because a
/// labeling has a single class, returns 1 if both do and 0 otherwise.
double ari(std::span<const int> a, std::span<const int> b);

}  // namespace skewcwm
