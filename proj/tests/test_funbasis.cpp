#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "skewcwm/errors.hpp"
#include "skewcwm/funbasis.hpp"

using namespace skewcwm;

namespace {

BSplineBasis random_basis(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> degree(0, 4);
  std::uniform_int_distribution<int> n_interior(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lower = -1.0 + u(gen);
  const double upper = lower + 0.5 + 2.0 * u(gen);
  std::vector<double> knots;
  const int m = n_interior(gen);
  for (int j = 0; j < m; ++j) knots.push_back(lower + (upper - lower) * (0.05 + 0.9 * u(gen)));
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return BSplineBasis(degree(gen), knots, lower, upper);
}

Curve sample(const BSplineBasis& basis, const Eigen::VectorXd& coef, int points) {
  Curve c;
  for (int j = 0; j < points; ++j) {
    const double t = basis.lower() + (basis.upper() - basis.lower()) * j / (points - 1);
    c.t.push_back(t);
    c.value.push_back(basis.evaluate(t).dot(coef));
  }
  return c;
}

}  // namespace

TEST_CASE("degree-zero basis is a pair of indicators") {
  const BSplineBasis basis(0, {0.5}, 0.0, 1.0);
  REQUIRE(basis.size() == 2);
  const Eigen::VectorXd row = basis.evaluate(0.25);
  CHECK(row(0) == 1.0);
  CHECK(row(1) == 0.0);
  const Eigen::MatrixXd gram = gram_matrix(basis);
  CHECK(gram(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gram(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gram(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("clamped cubic basis starts and ends at a single function") {
  const BSplineBasis basis = BSplineBasis::uniform(6, 3, 0.0, 1.0);
  REQUIRE(basis.size() == 6);
  CHECK(basis.interior_knots().size() == 2);
  Eigen::VectorXd first = Eigen::VectorXd::Zero(6);
  first(0) = 1.0;
  CHECK((basis.evaluate(0.0) - first).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::VectorXd last = Eigen::VectorXd::Zero(6);
  last(5) = 1.0;
  CHECK((basis.evaluate(1.0) - last).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("partition of unity and non-negativity") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int b = 0; b < 40; ++b) {
    const BSplineBasis basis = random_basis(gen);
    CHECK(basis.size() == static_cast<int>(basis.interior_knots().size()) + basis.degree() + 1);
    for (int i = 0; i < 50; ++i) {
      const double t = basis.lower() + (basis.upper() - basis.lower()) * u(gen);
      const Eigen::VectorXd row = basis.evaluate(t);
      CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(row.minCoeff() >= 0.0);
    }
    CHECK(basis.evaluate(basis.upper()).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("evaluation outside the domain and malformed bases are rejected") {
  const BSplineBasis basis = BSplineBasis::uniform(5, 2, 0.0, 1.0);
  CHECK_THROWS_AS(basis.evaluate(1.0 + 1e-9), DomainError);
  CHECK_THROWS_AS(basis.evaluate(-0.1), DomainError);
  CHECK_THROWS_AS(BSplineBasis(3, {0.6, 0.4}, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(BSplineBasis(3, {1.0}, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(BSplineBasis(3, {}, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(BSplineBasis::uniform(3, 3, 0.0, 1.0), DomainError);
}

TEST_CASE("Gram matrix agrees with adaptive quadrature") {
  std::mt19937_64 gen(5);
  for (int b = 0; b < 12; ++b) {
    const BSplineBasis basis = random_basis(gen);
    const Eigen::MatrixXd gram = gram_matrix(basis);
    CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    std::vector<double> breaks{basis.lower()};
    for (double k : basis.interior_knots()) breaks.push_back(k);
    breaks.push_back(basis.upper());
    for (int r = 0; r < basis.size(); ++r) {
      for (int s = r; s < basis.size(); ++s) {
        double ref = 0.0;
        for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
          // Integrate strictly inside each span so the piecewise definition is never ambiguous.
          ref += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
              [&](double t) {
                const Eigen::VectorXd v = basis.evaluate(t);
                return v(r) * v(s);
              },
              breaks[p], breaks[p + 1], 5, 1e-15);
        }
        INFO("basis " << b << " entry " << r << "," << s);
        CHECK(gram(r, s) == doctest::Approx(ref).epsilon(1e-10).scale(1e-3));
      }
    }
  }
}

TEST_CASE("block-diagonal Gram matrix across variables") {
  const std::vector<BSplineBasis> bases{BSplineBasis::uniform(4, 2, 0.0, 1.0), BSplineBasis::uniform(3, 1, 0.0, 2.0)};
  const Eigen::MatrixXd gram = gram_matrix(bases);
  REQUIRE(gram.rows() == 7);
  CHECK(gram.block(0, 4, 4, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((gram.block(0, 0, 4, 4) - gram_matrix(bases[0])).cwiseAbs().maxCoeff() == 0.0);
  CHECK((gram.block(4, 4, 3, 3) - gram_matrix(bases[1])).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetric PSD square root") {
  CHECK((sqrt_psd(Eigen::MatrixXd::Identity(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::MatrixXd d = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  const Eigen::MatrixXd root = sqrt_psd(d);
  CHECK(root(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(root(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(root(0, 1)) < 1e-15);

  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd a(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = z(gen);
    const Eigen::MatrixXd m = a * a.transpose();  // rank 3, PSD
    const Eigen::MatrixXd r = sqrt_psd(m);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r * r - m).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()));
  }

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(sqrt_psd(asym), DomainError);
  CHECK_THROWS_AS(sqrt_psd(Eigen::MatrixXd::Ones(2, 3)), DomainError);
}

TEST_CASE("least-squares smoothing") {
  const BSplineBasis basis = BSplineBasis::uniform(6, 3, 0.0, 1.0);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z;

  SUBCASE("exact basis expansions are recovered") {
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd coef(6);
      for (int r = 0; r < 6; ++r) coef(r) = 100.0 * z(gen);
      const Eigen::VectorXd fitted = fit_curve(basis, sample(basis, coef, 101), "c");
      CHECK((fitted - coef).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + coef.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("constant curve") {
    Curve c;
    for (int j = 0; j < 20; ++j) c.t.push_back(j / 19.0), c.value.push_back(-3.25);
    const Eigen::VectorXd fitted = fit_curve(basis, c, "c");
    CHECK((fitted.array() + 3.25).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("residuals are orthogonal to the design") {
    Curve c;
    for (int j = 0; j < 37; ++j) {
      const double t = (j + 0.3 * std::sin(j)) / 37.0;
      c.t.push_back(t);
      c.value.push_back(std::sin(6.0 * t) + 0.1 * z(gen));
    }
    const Eigen::VectorXd fitted = fit_curve(basis, c, "c");
    const Eigen::MatrixXd design = basis.evaluate(c.t);
    const Eigen::VectorXd residual = Eigen::Map<const Eigen::VectorXd>(c.value.data(), 37) - design * fitted;
    CHECK((design.transpose() * residual).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("too few distinct samples name the curve") {
    Curve c;
    for (int j = 0; j < 4; ++j) c.t.push_back(j / 3.0), c.value.push_back(1.0);
    CHECK_THROWS_WITH_AS(fit_curve(basis, c, "curve 17, variable X1"), doctest::Contains("curve 17"), InputError);
    // Enough samples, but all inside one knot span: the design loses rank.
    Curve clustered;
    for (int j = 0; j < 10; ++j) clustered.t.push_back(0.01 * j), clustered.value.push_back(1.0);
    CHECK_THROWS_WITH_AS(fit_curve(basis, clustered, "curve 9"), doctest::Contains("curve 9"), InputError);
  }
}

TEST_CASE("fit_coefficients keeps the variable-major block layout") {
  const std::vector<BSplineBasis> xb{BSplineBasis::uniform(5, 3, 0.0, 1.0), BSplineBasis::uniform(4, 2, 0.0, 1.0)};
  const std::vector<BSplineBasis> yb{BSplineBasis::uniform(6, 3, 0.0, 1.0)};
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  CurveSet set;
  set.x_names = {"A", "B"};
  set.y_names = {"R"};
  Eigen::MatrixXd cx(3, 9);
  Eigen::MatrixXd cy(3, 6);
  for (int i = 0; i < 3; ++i) {
    set.ids.push_back("obs" + std::to_string(i));
    for (int r = 0; r < 9; ++r) cx(i, r) = z(gen);
    for (int r = 0; r < 6; ++r) cy(i, r) = z(gen);
    set.x.push_back({sample(xb[0], cx.row(i).head(5).transpose(), 40), sample(xb[1], cx.row(i).tail(4).transpose(), 40)});
    set.y.push_back({sample(yb[0], cy.row(i).transpose(), 40)});
  }
  const FunctionalDataset data = fit_coefficients(set, xb, yb);
  CHECK(data.rx() == 9);
  CHECK(data.ry() == 6);
  CHECK((data.cx - cx).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((data.cy - cy).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((data.gram_x_sqrt * data.gram_x_sqrt - data.gram_x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(data.gram_x.block(0, 5, 5, 4).cwiseAbs().maxCoeff() == 0.0);

  // Pointwise reconstruction of every curve from its coefficient block.
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd back = evaluate_curve(xb[1], data.cx.row(i).segment(5, 4).transpose(), set.x[i][1].t);
    for (std::size_t j = 0; j < set.x[i][1].t.size(); ++j) CHECK(back(j) == doctest::Approx(set.x[i][1].value[j]).epsilon(1e-9));
  }

  CurveSet bad = set;
  bad.x[1][0].t[3] = bad.x[1][0].t[2];
  CHECK_THROWS_AS(fit_coefficients(bad, xb, yb), InputError);
  CHECK_THROWS_AS(fit_coefficients(set, {xb[0]}, yb), InputError);
}
