#include "skewcwm/funbasis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "skewcwm/errors.hpp"

namespace skewcwm {

BSplineBasis::BSplineBasis(int degree, std::vector<double> interior_knots, double lower, double upper)
    : degree_(degree), lower_(lower), upper_(upper), interior_(std::move(interior_knots)) {
  if (degree_ < 0) throw DomainError("B-spline degree must be non-negative");
  if (!std::isfinite(lower_) || !std::isfinite(upper_) || !(lower_ < upper_)) {
    throw DomainError("B-spline domain must be a finite interval with lower < upper");
  }
  double previous = lower_;
  for (double k : interior_) {
    if (!(k > previous) || !(k < upper_)) {
      throw DomainError("interior knots must be strictly increasing and inside the domain");
    }
    previous = k;
  }
  knots_.assign(static_cast<std::size_t>(degree_ + 1), lower_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree_ + 1), upper_);
}

BSplineBasis BSplineBasis::uniform(int n_basis, int degree, double lower, double upper) {
  if (degree < 0) throw DomainError("B-spline degree must be non-negative");
  const int n_interior = n_basis - degree - 1;
  if (n_interior < 0) throw DomainError("a basis of this degree needs at least degree + 1 functions");
  std::vector<double> interior(static_cast<std::size_t>(n_interior));
  for (int j = 0; j < n_interior; ++j) {
    interior[static_cast<std::size_t>(j)] = lower + (upper - lower) * (j + 1) / (n_interior + 1);
  }
  return BSplineBasis(degree, std::move(interior), lower, upper);
}

int BSplineBasis::nonzero(double t, double* values) const {
  if (!(t >= lower_ && t <= upper_)) throw DomainError("B-spline evaluated outside its domain");
  const int n = size();
  const int p = degree_;
  const auto first = knots_.begin() + p;
  const auto last = knots_.begin() + n + 1;
  int span = static_cast<int>(std::upper_bound(first, last, t) - knots_.begin()) - 1;
  span = std::min(span, n - 1);

  // Cox-de Boor triangle, computed in place.
  std::vector<double> left(static_cast<std::size_t>(p + 1));
  std::vector<double> right(static_cast<std::size_t>(p + 1));
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return span - p;
}

Eigen::VectorXd BSplineBasis::evaluate(double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  std::vector<double> vals(static_cast<std::size_t>(degree_ + 1));
  const int first = nonzero(t, vals.data());
  for (int j = 0; j <= degree_; ++j) out[first + j] = vals[j];
  return out;
}

Eigen::MatrixXd BSplineBasis::evaluate(std::span<const double> t) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.size()), size());
  std::vector<double> vals(static_cast<std::size_t>(degree_ + 1));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const int first = nonzero(t[i], vals.data());
    for (int j = 0; j <= degree_; ++j) out(static_cast<Eigen::Index>(i), first + j) = vals[j];
  }
  return out;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

Eigen::MatrixXd gram_matrix(const BSplineBasis& basis) {
  const int p = basis.degree();
  const int n_nodes = (2 * p + 2) / 2 + 1;  // ceil((2p + 1) / 2) + 1
  const QuadratureRule rule = gauss_legendre(n_nodes);
  std::vector<double> breaks{basis.lower()};
  breaks.insert(breaks.end(), basis.interior_knots().begin(), basis.interior_knots().end());
  breaks.push_back(basis.upper());

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  std::vector<double> vals(static_cast<std::size_t>(p + 1));
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double half = 0.5 * (breaks[s + 1] - breaks[s]);
    const double mid = 0.5 * (breaks[s + 1] + breaks[s]);
    for (int q = 0; q < n_nodes; ++q) {
      const double t = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q];
      const int first = basis.nonzero(t, vals.data());
      for (int i = 0; i <= p; ++i) {
        for (int j = i; j <= p; ++j) gram(first + i, first + j) += w * vals[i] * vals[j];
      }
    }
  }
  gram.triangularView<Eigen::StrictlyLower>() = gram.transpose();
  return gram;
}

Eigen::MatrixXd gram_matrix(std::span<const BSplineBasis> bases) {
  int total = 0;
  for (const auto& b : bases) total += b.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
  int offset = 0;
  for (const auto& b : bases) {
    out.block(offset, offset, b.size(), b.size()) = gram_matrix(b);
    offset += b.size();
  }
  return out;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("sqrt_psd: matrix is not square");
  if (m.size() == 0) return m;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw DomainError("sqrt_psd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("sqrt_psd: eigendecomposition failed");
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

void CurveSet::validate() const {
  const std::size_t n = ids.size();
  if (x.size() != n || y.size() != n) throw InputError("curve set: per-observation lists have different lengths");
  if (x_names.empty() || y_names.empty()) throw InputError("curve set needs at least one X and one Y variable");
  const auto check = [&](const std::vector<std::vector<Curve>>& side, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < n; ++i) {
      if (side[i].size() != names.size()) {
        throw InputError("curve " + ids[i] + " does not have every variable");
      }
      for (std::size_t v = 0; v < names.size(); ++v) {
        const Curve& c = side[i][v];
        if (c.t.size() != c.value.size()) {
          throw InputError("curve " + ids[i] + ", variable " + names[v] + ": time and value counts differ");
        }
        for (std::size_t j = 0; j < c.t.size(); ++j) {
          if (!std::isfinite(c.t[j]) || !std::isfinite(c.value[j])) {
            throw InputError("curve " + ids[i] + ", variable " + names[v] + ": non-finite sample");
          }
          if (j > 0 && !(c.t[j] > c.t[j - 1])) {
            throw InputError("curve " + ids[i] + ", variable " + names[v] + ": times are not strictly increasing");
          }
        }
      }
    }
  };
  check(x, x_names);
  check(y, y_names);
}

Eigen::VectorXd fit_curve(const BSplineBasis& basis, const Curve& curve, const std::string& label) {
  const auto m = static_cast<Eigen::Index>(curve.t.size());
  if (m < basis.size()) {
    throw InputError(label + ": " + std::to_string(m) + " samples cannot determine " +
                     std::to_string(basis.size()) + " basis coefficients");
  }
  for (double t : curve.t) {
    if (!(t >= basis.lower() && t <= basis.upper())) throw InputError(label + ": sample time outside the basis domain");
  }
  const Eigen::MatrixXd design = basis.evaluate(curve.t);
  const Eigen::Map<const Eigen::VectorXd> values(curve.value.data(), m);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < basis.size()) throw InputError(label + ": rank-deficient smoothing design");
  return qr.solve(values);
}

FunctionalDataset FunctionalDataset::from_coefficients(Eigen::MatrixXd cx, Eigen::MatrixXd cy,
                                                       std::vector<BSplineBasis> x_bases,
                                                       std::vector<BSplineBasis> y_bases,
                                                       std::vector<std::string> ids,
                                                       std::vector<std::string> x_names,
                                                       std::vector<std::string> y_names) {
  if (cx.rows() != cy.rows()) throw ModelError("X and Y coefficient matrices have different row counts");
  int rx = 0;
  for (const auto& b : x_bases) rx += b.size();
  int ry = 0;
  for (const auto& b : y_bases) ry += b.size();
  if (cx.cols() != rx || cy.cols() != ry) throw ModelError("coefficient widths do not match the bases");
  const auto n = static_cast<std::size_t>(cx.rows());
  if (ids.empty()) {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  }
  if (ids.size() != n) throw ModelError("one identifier per observation is required");
  const auto default_names = [](std::vector<std::string>& names, std::size_t count, const char* prefix) {
    if (names.empty()) {
      for (std::size_t j = 0; j < count; ++j) names.push_back(prefix + std::to_string(j + 1));
    }
    if (names.size() != count) throw ModelError("one name per variable is required");
  };
  default_names(x_names, x_bases.size(), "X");
  default_names(y_names, y_bases.size(), "Y");

  FunctionalDataset data;
  data.gram_x = gram_matrix(x_bases);
  data.gram_x_sqrt = sqrt_psd(data.gram_x);
  data.ids = std::move(ids);
  data.x_names = std::move(x_names);
  data.y_names = std::move(y_names);
  data.x_bases = std::move(x_bases);
  data.y_bases = std::move(y_bases);
  data.cx = std::move(cx);
  data.cy = std::move(cy);
  return data;
}

FunctionalDataset fit_coefficients(const CurveSet& curves, const std::vector<BSplineBasis>& x_bases,
                                   const std::vector<BSplineBasis>& y_bases) {
  curves.validate();
  if (x_bases.size() != curves.x_names.size() || y_bases.size() != curves.y_names.size()) {
    throw InputError("one basis per variable is required");
  }
  const auto fill = [&](const std::vector<std::vector<Curve>>& side, const std::vector<BSplineBasis>& bases,
                        const std::vector<std::string>& names) {
    int width = 0;
    for (const auto& b : bases) width += b.size();
    Eigen::MatrixXd coef(curves.size(), width);
    for (int i = 0; i < curves.size(); ++i) {
      int offset = 0;
      for (std::size_t v = 0; v < bases.size(); ++v) {
        const std::string label = "curve " + curves.ids[i] + ", variable " + names[v];
        coef.row(i).segment(offset, bases[v].size()) = fit_curve(bases[v], side[i][v], label).transpose();
        offset += bases[v].size();
      }
    }
    return coef;
  };
  return FunctionalDataset::from_coefficients(fill(curves.x, x_bases, curves.x_names),
                                              fill(curves.y, y_bases, curves.y_names), x_bases, y_bases,
                                              curves.ids, curves.x_names, curves.y_names);
}

Eigen::VectorXd evaluate_curve(const BSplineBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coef,
                               std::span<const double> t) {
  if (coef.size() != basis.size()) throw ModelError("coefficient count does not match the basis");
  return basis.evaluate(t) * coef;
}

}  // namespace skewcwm
