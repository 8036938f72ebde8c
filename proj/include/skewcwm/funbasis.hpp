#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace skewcwm {

/// Clamped B-spline basis on a closed interval.
class BSplineBasis {
 public:
  /// `interior_knots` must be strictly increasing and lie strictly inside (lower, upper).
  BSplineBasis(int degree, std::vector<double> interior_knots, double lower, double upper);

  /// Basis with `n_basis` functions and equally spaced interior knots.
  static BSplineBasis uniform(int n_basis, int degree, double lower, double upper);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  /// Full knot vector with the end knots repeated degree + 1 times.
  const std::vector<double>& knots() const noexcept { return knots_; }

  /// Index of the first nonzero function at t; the degree + 1 values are written to `values`.
  int nonzero(double t, double* values) const;

  /// Values of all basis functions at one point.
  Eigen::VectorXd evaluate(double t) const;

  /// Design matrix with one row per point.
  Eigen::MatrixXd evaluate(std::span<const double> t) const;

  friend bool operator==(const BSplineBasis&, const BSplineBasis&) = default;

 private:
  int degree_;
  double lower_;
  double upper_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n);

/// Gram matrix of inner products of basis functions, one block per basis.
Eigen::MatrixXd gram_matrix(std::span<const BSplineBasis> bases);
Eigen::MatrixXd gram_matrix(const BSplineBasis& basis);

/// Symmetric square root of a positive semi-definite matrix (negative eigenvalues clipped to zero).
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// One sampled curve.
struct Curve {
  std::vector<double> t;
  std::vector<double> value;
};

/// Multivariate curves: for each observation, one curve per X variable and per Y variable.
struct CurveSet {
  std::vector<std::string> ids;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::vector<std::vector<Curve>> x;  // [observation][variable]
  std::vector<std::vector<Curve>> y;

  int size() const noexcept { return static_cast<int>(ids.size()); }
  /// Throws InputError when shapes disagree or a curve has unsorted or mismatched samples.
  void validate() const;
};

/// Basis coefficients of every observation together with the Gram matrix of the X side.
struct FunctionalDataset {
  std::vector<std::string> ids;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::vector<BSplineBasis> x_bases;
  std::vector<BSplineBasis> y_bases;
  Eigen::MatrixXd cx;  // n x R_X
  Eigen::MatrixXd cy;  // n x R_Y
  Eigen::MatrixXd gram_x;
  Eigen::MatrixXd gram_x_sqrt;

  int size() const noexcept { return static_cast<int>(cx.rows()); }
  int rx() const noexcept { return static_cast<int>(cx.cols()); }
  int ry() const noexcept { return static_cast<int>(cy.cols()); }

  /// Assembles a dataset from coefficients, computing the Gram matrix and its root.
  static FunctionalDataset from_coefficients(Eigen::MatrixXd cx, Eigen::MatrixXd cy,
                                             std::vector<BSplineBasis> x_bases,
                                             std::vector<BSplineBasis> y_bases,
                                             std::vector<std::string> ids = {},
                                             std::vector<std::string> x_names = {},
                                             std::vector<std::string> y_names = {});
};

/// Least-squares coefficients of one curve; throws InputError naming `label` when the
/// design is rank deficient or has too few points.
Eigen::VectorXd fit_curve(const BSplineBasis& basis, const Curve& curve, const std::string& label);

/// Smooths every curve of `curves` onto the given bases.
FunctionalDataset fit_coefficients(const CurveSet& curves, const std::vector<BSplineBasis>& x_bases,
                                   const std::vector<BSplineBasis>& y_bases);

/// Curve values of stacked coefficients for one variable block.
Eigen::VectorXd evaluate_curve(const BSplineBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coef,
                               std::span<const double> t);

}  // namespace skewcwm
