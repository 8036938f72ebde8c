#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <doctest.h>

#include "oracle.hpp"
#include "skewcwm/errors.hpp"
#include "skewcwm/special.hpp"

using namespace skewcwm;

TEST_CASE("log_bessel_k closed forms and symmetry") {
  const double expected = std::log(std::sqrt(std::numbers::pi / 4.0) * std::exp(-2.0));
  CHECK(log_bessel_k(0.5, 2.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(log_bessel_k(0.5, 2.0) == doctest::Approx(-2.1208).epsilon(1e-4));
  CHECK(log_bessel_k(-0.5, 2.0) == log_bessel_k(0.5, 2.0));
  for (double order : {0.0, 0.3, 1.7, 4.2, 12.5, 60.0}) {
    for (double x : {1e-6, 0.3, 1.9, 2.0, 7.0, 300.0}) {
      CHECK(log_bessel_k(order, x) == log_bessel_k(-order, x));
    }
  }
  // K_{3/2}(x) = sqrt(pi / 2x) e^{-x} (1 + 1/x)
  for (double x : {0.01, 0.5, 1.999, 2.0, 3.0, 50.0}) {
    const double k32 = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x + std::log1p(1.0 / x);
    CHECK(log_bessel_k(1.5, x) == doctest::Approx(k32).epsilon(1e-13));
  }
}

TEST_CASE("log_bessel_k matches the integral definition") {
  CHECK(log_bessel_k(1.5, 3.0) == doctest::Approx(oracle::log_bessel_k_integral(1.5, 3.0)).epsilon(1e-10));
  CHECK(log_bessel_k(-2.3, 0.7) == doctest::Approx(oracle::log_bessel_k_integral(-2.3, 0.7)).epsilon(1e-10));
}

TEST_CASE("log_bessel_k agrees with Boost over a wide grid") {
  for (double order = -30.0; order <= 30.0; order += 0.37) {
    for (double x : {1e-3, 0.05, 0.4, 1.0, 1.7, 1.99, 2.0, 2.01, 3.5, 9.0, 40.0, 200.0}) {
      const double ref = std::log(boost::math::cyl_bessel_k(order, x));
      if (!std::isfinite(ref)) continue;
      INFO("order " << order << " x " << x);
      CHECK(log_bessel_k(order, x) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("log_bessel_k large orders and extreme arguments") {
  // Debye branch against Boost where K is representable.
  for (double order : {50.0, 55.5, 80.25, 120.0}) {
    for (double x : {10.0, 60.0, 150.0, 400.0}) {
      const double ref = std::log(boost::math::cyl_bessel_k(order, x));
      if (!std::isfinite(ref)) continue;
      INFO("order " << order << " x " << x);
      CHECK(log_bessel_k(order, x) == doctest::Approx(ref).epsilon(1e-11));
    }
  }
  // Continuity across the switch to the asymptotic branch.
  for (double x : {0.5, 5.0, 70.0}) {
    CHECK(log_bessel_k(49.999999, x) == doctest::Approx(log_bessel_k(50.0, x)).epsilon(1e-6));
  }
  // Arguments where K under- or overflows stay finite on the log scale.
  CHECK(std::isfinite(log_bessel_k(0.3, 1e4)));
  CHECK(log_bessel_k(0.5, 1e4) == doctest::Approx(0.5 * std::log(std::numbers::pi / 2e4) - 1e4).epsilon(1e-14));
  CHECK(std::isfinite(log_bessel_k(30.0, 1e-12)));
}

TEST_CASE("log_bessel_k triplet matches single evaluations") {
  for (double order : {-7.3, -1.0, -0.4, 0.0, 0.6, 1.0, 2.5, 48.7, 49.5, 75.0}) {
    for (double x : {0.02, 1.5, 2.5, 30.0}) {
      const auto t = log_bessel_k_triplet(order, x);
      CHECK(t[0] == doctest::Approx(log_bessel_k(order - 1.0, x)).epsilon(1e-12));
      CHECK(t[1] == doctest::Approx(log_bessel_k(order, x)).epsilon(1e-12));
      CHECK(t[2] == doctest::Approx(log_bessel_k(order + 1.0, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("log_bessel_k rejects invalid arguments") {
  CHECK_THROWS_AS(log_bessel_k(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(log_bessel_k(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(log_bessel_k(std::nan(""), 1.0), DomainError);
  CHECK_THROWS_AS(log_bessel_k(1.0, std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("order derivative") {
  for (double x : {0.1, 1.0, 2.0, 25.0}) CHECK(dlog_bessel_k_dorder(0.0, x) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  // Richardson check: halving the step leaves the estimate unchanged to 1e-6.
  const double h = 5e-5;
  const double halved = (log_bessel_k(0.5 + h, 2.0) - log_bessel_k(0.5 - h, 2.0)) / (2.0 * h);
  CHECK(dlog_bessel_k_dorder(0.5, 2.0) == doctest::Approx(halved).epsilon(1e-6));
  // Derivative of the quadrature-evaluated function.
  const double step = 1e-3;
  const double quad = (oracle::log_bessel_k_integral(1.5 + step, 3.0) - oracle::log_bessel_k_integral(1.5 - step, 3.0)) /
                      (2.0 * step);
  CHECK(dlog_bessel_k_dorder(1.5, 3.0) == doctest::Approx(quad).epsilon(1e-5));
}

TEST_CASE("digamma and trigamma") {
  CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-14));
  CHECK(digamma(2.0) == doctest::Approx(0.4227843350984671).epsilon(1e-14));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 40.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(gen);
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
    CHECK(digamma(x) == doctest::Approx(boost::math::digamma(x)).epsilon(1e-12));
    CHECK(trigamma(x) == doctest::Approx(boost::math::trigamma(x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(digamma(0.0), DomainError);
  CHECK_THROWS_AS(trigamma(-1.0), DomainError);
}
