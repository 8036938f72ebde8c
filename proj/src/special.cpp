#include "skewcwm/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "skewcwm/errors.hpp"

namespace skewcwm {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = std::numbers::pi;
constexpr int kMaxIterations = 100000;

// Orders at or above this use the uniform asymptotic expansion.
constexpr double kLargeOrder = 50.0;
constexpr int kDebyeTerms = 13;

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

struct Seed {
  double log_k;      // log K_mu(x)
  double log_ratio;  // log(K_{mu+1}(x) / K_mu(x))
};

// Temme's series for |mu| <= 1/2 and x < 2.
Seed seed_series(double mu, double x) {
  const double inv_gamma_plus = 1.0 / std::tgamma(1.0 + mu);
  const double inv_gamma_minus = 1.0 / std::tgamma(1.0 - mu);
  double gam1;
  if (std::abs(mu) > 0.01) {
    gam1 = (inv_gamma_minus - inv_gamma_plus) / (2.0 * mu);
  } else {
    // Odd Taylor coefficients of 1/Gamma(1 + z) about zero.
    const double m2 = mu * mu;
    gam1 = -(0.5772156649015329 +
             m2 * (-0.0420026350340952 + m2 * (-0.0421977345555443 + m2 * 0.0072189432466630)));
  }
  const double gam2 = 0.5 * (inv_gamma_minus + inv_gamma_plus);

  const double half_x = 0.5 * x;
  const double pimu = kPi * mu;
  const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(half_x);
  double e = mu * d;
  const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / inv_gamma_plus;
  double q = 0.5 / (e * inv_gamma_minus);
  double c = 1.0;
  d = half_x * half_x;
  double sum1 = p;
  const double mu2 = mu * mu;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double di = static_cast<double>(i);
    ff = (di * ff + p + q) / (di * di - mu2);
    c *= d / di;
    p /= di - mu;
    q /= di + mu;
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - di * ff);
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  const double log_k = std::log(sum);
  return {log_k, std::log(sum1) + std::log(2.0 / x) - log_k};
}

// Steed's continued fraction for |mu| <= 1/2 and x >= 2, kept in scaled form.
Seed seed_continued_fraction(double mu, double x) {
  const double mu2 = mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double di = static_cast<double>(i);
    a -= 2.0 * di;
    c = -a * c / (di + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double log_k = 0.5 * std::log(kPi / (2.0 * x)) - x - std::log(s);
  const double ratio = (mu + x + 0.5 - h) / x;
  return {log_k, std::log(ratio)};
}

Seed seed_for(double mu, double x) {
  return x < 2.0 ? seed_series(mu, x) : seed_continued_fraction(mu, x);
}

// Fills out[0..count) with log K at orders top - count + 1, ..., top, for
// top >= 0 and count <= round(top) + 1.
void log_k_run(double top, double x, int count, double* out) {
  const double steps = std::nearbyint(top);
  const int n = static_cast<int>(steps);
  const double mu = top - steps;
  Seed s = seed_for(mu, x);
  double log_k = s.log_k;
  double log_ratio = s.log_ratio;
  const double log_x = std::log(x);
  const int first = n - count + 1;
  if (first == 0) out[0] = log_k;
  for (int j = 1; j <= n; ++j) {
    log_k += log_ratio;
    const double order = mu + j;
    log_ratio = log_add_exp(std::log(2.0 * order) - log_x, -log_ratio);
    if (j >= first) out[j - first] = log_k;
  }
}

using Polynomial = std::vector<double>;

const std::vector<Polynomial>& debye_polynomials() {
  static const std::vector<Polynomial> polys = [] {
    std::vector<Polynomial> u{{1.0}};
    for (int k = 1; k < kDebyeTerms; ++k) {
      const Polynomial& prev = u.back();
      Polynomial next(prev.size() + 3, 0.0);
      for (std::size_t j = 1; j < prev.size(); ++j) {
        const double deriv = static_cast<double>(j) * prev[j];  // coefficient of t^(j-1)
        next[j + 1] += 0.5 * deriv;
        next[j + 3] -= 0.5 * deriv;
      }
      for (std::size_t j = 0; j < prev.size(); ++j) {
        next[j + 1] += 0.125 * prev[j] / static_cast<double>(j + 1);
        next[j + 3] -= 0.625 * prev[j] / static_cast<double>(j + 3);
      }
      u.push_back(std::move(next));
    }
    return u;
  }();
  return polys;
}

double log_k_large_order(double nu, double x) {
  const double z = x / nu;
  const double root = std::hypot(1.0, z);
  const double t = 1.0 / root;
  const double eta = root + std::log(x) - std::log(nu) - std::log1p(root);
  double series = 0.0;
  double scale = 1.0;
  for (const Polynomial& p : debye_polynomials()) {
    double value = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) value = value * t + *it;
    series += scale * value;
    scale *= -1.0 / nu;
  }
  return 0.5 * std::log(kPi / (2.0 * nu)) - nu * eta - 0.5 * std::log(root) + std::log(series);
}

void check_bessel_arguments(double order, double x) {
  if (!std::isfinite(order)) throw DomainError("log_bessel_k: order must be finite");
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_bessel_k: argument must be positive and finite, got " + std::to_string(x));
  }
}

}  // namespace

double log_bessel_k(double order, double x) {
  check_bessel_arguments(order, x);
  const double nu = std::abs(order);
  if (nu >= kLargeOrder) return log_k_large_order(nu, x);
  double out;
  log_k_run(nu, x, 1, &out);
  return out;
}

std::array<double, 3> log_bessel_k_triplet(double order, double x) {
  check_bessel_arguments(order, x);
  const double nu = std::abs(order);
  if (nu < 1.0 || nu + 1.0 >= kLargeOrder) {
    return {log_bessel_k(order - 1.0, x), log_bessel_k(order, x), log_bessel_k(order + 1.0, x)};
  }
  std::array<double, 3> run{};
  log_k_run(nu + 1.0, x, 3, run.data());
  if (order < 0.0) std::swap(run[0], run[2]);
  return run;
}

double dlog_bessel_k_dorder(double order, double x) {
  constexpr double h = 1e-4;
  return (log_bessel_k(order + h, x) - log_bessel_k(order - h, x)) / (2.0 * h);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: argument must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic series in 1/x^2 with Bernoulli-number coefficients.
  const double tail =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return shift + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("trigamma: argument must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double tail =
      1.0 / 6 -
      inv2 * (1.0 / 30 -
              inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6)))));
  return shift + inv + 0.5 * inv2 + inv * inv2 * tail;
}

}  // namespace skewcwm
