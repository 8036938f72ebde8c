#include "skewcwm/eval.hpp"

#include <algorithm>

#include "skewcwm/errors.hpp"

namespace skewcwm {
namespace {

std::vector<int> distinct(std::span<const int> labels) {
  std::vector<int> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int index_of(const std::vector<int>& sorted, int label) {
  return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), label) - sorted.begin());
}

double pairs(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

Contingency confusion(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DomainError("confusion: labelings have different lengths");
  Contingency table{distinct(a), distinct(b), {}};
  table.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(table.row_labels.size()),
                                       static_cast<Eigen::Index>(table.col_labels.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table.counts(index_of(table.row_labels, a[i]), index_of(table.col_labels, b[i]));
  }
  return table;
}

double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DomainError("ari: labelings have different lengths");
  if (a.empty()) throw DomainError("ari: labelings are empty");
  const Contingency table = confusion(a, b);
  const bool a_constant = table.row_labels.size() == 1;
  const bool b_constant = table.col_labels.size() == 1;
  if (a_constant || b_constant) return a_constant && b_constant ? 1.0 : 0.0;

  const Eigen::MatrixXd counts = table.counts.cast<double>();
  double index = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) index += pairs(counts.data()[i]);
  double row_sum = 0.0;
  for (double r : Eigen::VectorXd(counts.rowwise().sum())) row_sum += pairs(r);
  double col_sum = 0.0;
  for (double c : Eigen::VectorXd(counts.colwise().sum())) col_sum += pairs(c);
  const double expected = row_sum * col_sum / pairs(static_cast<double>(a.size()));
  const double maximum = 0.5 * (row_sum + col_sum);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace skewcwm
