#include "skewcwm/skewdist.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "skewcwm/errors.hpp"
#include "skewcwm/special.hpp"

namespace skewcwm {
namespace {

constexpr double kLog2 = std::numbers::ln2;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

SkewFamily SkewFamily::make(SkewKind kind, double concentration) {
  SkewFamily f{kind, concentration};
  f.validate();
  return f;
}

SkewFamily SkewFamily::variance_gamma(double psi) { return make(SkewKind::VarianceGamma, psi); }
SkewFamily SkewFamily::skew_t(double nu) { return make(SkewKind::SkewT, nu); }
SkewFamily SkewFamily::normal_inverse_gaussian(double kappa) {
  return make(SkewKind::NormalInverseGaussian, kappa);
}

void SkewFamily::validate() const {
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw ModelError(std::string(kind_name(kind)) + " concentration must be positive and finite");
  }
}

std::string_view kind_name(SkewKind kind) {
  switch (kind) {
    case SkewKind::VarianceGamma: return "VG";
    case SkewKind::SkewT: return "ST";
    case SkewKind::NormalInverseGaussian: return "NIG";
  }
  return "?";
}

SkewKind parse_skew_kind(std::string_view name) {
  if (name == "VG") return SkewKind::VarianceGamma;
  if (name == "ST") return SkewKind::SkewT;
  if (name == "NIG") return SkewKind::NormalInverseGaussian;
  throw InputError("unknown skew family '" + std::string(name) + "' (expected VG, ST or NIG)");
}

GigParams::GigParams(double a_, double b_, double lambda_) : a(a_), b(b_), lambda(lambda_) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("GIG: a must be positive and finite");
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("GIG: b must be non-negative and finite");
  if (!std::isfinite(lambda)) throw DomainError("GIG: lambda must be finite");
  if (b == 0.0 && !(lambda > 0.0)) throw DomainError("GIG: b == 0 requires lambda > 0");
}

GigMoments latent_moments(double a, double b, double lambda) {
  constexpr double tiny = std::numeric_limits<double>::min();
  const double omega = std::sqrt(a * b);
  if (b <= 0.0 || (omega < tiny && lambda > 0.0)) {
    if (!(a > 0.0) || !(lambda > 0.0)) throw DomainError("GIG gamma limit needs a > 0 and lambda > 0");
    // Gamma(lambda, rate a/2).
    const double rate = 0.5 * a;
    return {lambda / rate,
            lambda > 1.0 ? rate / (lambda - 1.0) : std::numeric_limits<double>::infinity(),
            digamma(lambda) - std::log(rate)};
  }
  if (a <= 0.0 || (omega < tiny && lambda < 0.0)) {
    if (!(b > 0.0) || !(lambda < 0.0)) {
      throw DomainError("GIG inverse gamma limit needs b > 0 and lambda < 0");
    }
    // Inverse gamma with shape -lambda and scale b/2.
    const double shape = -lambda;
    const double scale = 0.5 * b;
    return {shape > 1.0 ? scale / (shape - 1.0) : std::numeric_limits<double>::infinity(),
            shape / scale, std::log(scale) - digamma(shape)};
  }
  if (omega < tiny) throw DomainError("GIG with lambda == 0 and vanishing a*b is improper");
  const auto lk = log_bessel_k_triplet(lambda, omega);
  const double half_log_ratio = 0.5 * (std::log(b) - std::log(a));
  return {std::exp(half_log_ratio + lk[2] - lk[1]), std::exp(-half_log_ratio + lk[0] - lk[1]),
          half_log_ratio + dlog_bessel_k_dorder(lambda, omega)};
}

GigMoments gig_expectations(const GigParams& gig) { return latent_moments(gig.a, gig.b, gig.lambda); }

UnifiedConstants unified_constants(const SkewFamily& family, int dim) {
  family.validate();
  if (dim < 1) throw DomainError("unified_constants: dimension must be positive");
  const double d = dim;
  const double c = family.concentration;
  switch (family.kind) {
    case SkewKind::VarianceGamma:
      return {0.0, 2.0 * c, 0.5 * (c - 0.5 * d), kLog2 + c * std::log(c) - std::lgamma(c)};
    case SkewKind::SkewT:
      return {c, 0.0, -0.25 * (c + d), kLog2 + 0.5 * c * std::log(0.5 * c) - std::lgamma(0.5 * c)};
    case SkewKind::NormalInverseGaussian:
      return {1.0, c * c, -0.25 * (1.0 + d), kLog2 + c - 0.5 * kLog2Pi};
  }
  throw DomainError("unified_constants: unknown family");
}

double unified_log_density(const QuadraticForms& q, const UnifiedConstants& c) {
  const double big_a = q.rho + c.p2;
  const double big_b = q.delta + c.p1;
  const double order = 2.0 * c.p3;
  const double base = q.cross + c.p4 - 0.5 * q.dim * kLog2Pi - 0.5 * q.log_det;
  const double omega = std::sqrt(big_a * big_b);
  if (omega >= std::numeric_limits<double>::min()) {
    return base + c.p3 * (std::log(big_b) - std::log(big_a)) + log_bessel_k(order, omega);
  }
  // Leading term of K as its argument vanishes: K_v(z) ~ Gamma(|v|)/2 (z/2)^-|v|.
  if (c.p3 == 0.0) {
    throw ModelError("density is unbounded at this point (zero-order Bessel term at zero argument)");
  }
  const double abs_p3 = std::abs(c.p3);
  const auto scaled_log = [](double coefficient, double x) {
    if (coefficient == 0.0) return 0.0;
    return coefficient * std::log(x);
  };
  return base + scaled_log(c.p3 - abs_p3, big_b) + scaled_log(-c.p3 - abs_p3, big_a) +
         std::lgamma(2.0 * abs_p3) + (2.0 * abs_p3 - 1.0) * kLog2;
}

void SkewParams::validate() const {
  const auto d = mu.size();
  if (d < 1) throw ModelError("SkewParams: empty location vector");
  if (alpha.size() != d) throw ModelError("SkewParams: skewness vector has the wrong length");
  if (sigma.rows() != d || sigma.cols() != d) throw ModelError("SkewParams: scale matrix has the wrong shape");
  if (!mu.allFinite() || !alpha.allFinite() || !sigma.allFinite()) {
    throw ModelError("SkewParams: non-finite entries");
  }
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ModelError("SkewParams: scale matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw ModelError("SkewParams: scale matrix is not positive definite");
  family.validate();
}

QuadraticForms quadratic_forms(const Eigen::VectorXd& v, const SkewParams& params) {
  params.validate();
  if (v.size() != params.mu.size()) throw DomainError("observation length does not match the model");
  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
  const Eigen::MatrixXd& lower = llt.matrixL();
  Eigen::VectorXd u = v - params.mu;
  Eigen::VectorXd s = params.alpha;
  llt.matrixL().solveInPlace(u);
  llt.matrixL().solveInPlace(s);
  return {u.squaredNorm(), s.squaredNorm(), u.dot(s), 2.0 * lower.diagonal().array().log().sum(),
          params.dim()};
}

double skew_log_density(const Eigen::VectorXd& v, const SkewParams& params) {
  const QuadraticForms q = quadratic_forms(v, params);
  return unified_log_density(q, unified_constants(params.family, params.dim()));
}

GigParams conditional_gig(const Eigen::VectorXd& v, const SkewParams& params) {
  const QuadraticForms q = quadratic_forms(v, params);
  const UnifiedConstants c = unified_constants(params.family, params.dim());
  return GigParams(q.rho + c.p2, q.delta + c.p1, 2.0 * c.p3);
}

double sample_mixing_weight(const SkewFamily& family, Rng& rng) {
  const double c = family.concentration;
  switch (family.kind) {
    case SkewKind::VarianceGamma: return rng.gamma(c, c);
    case SkewKind::SkewT: return 1.0 / rng.gamma(0.5 * c, 0.5 * c);
    case SkewKind::NormalInverseGaussian: return rng.inverse_gaussian(1.0 / c, 1.0);
  }
  throw DomainError("sample_mixing_weight: unknown family");
}

Eigen::MatrixXd sample_skew(const SkewParams& params, int n, Rng& rng) {
  params.validate();
  if (n < 0) throw DomainError("sample_skew: negative sample size");
  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
  const Eigen::MatrixXd lower = llt.matrixL();
  Eigen::MatrixXd out(n, params.dim());
  for (int i = 0; i < n; ++i) {
    const double w = sample_mixing_weight(params.family, rng);
    const Eigen::VectorXd z = rng.normal_vector(params.dim());
    out.row(i) = (params.mu + w * params.alpha + std::sqrt(w) * (lower * z)).transpose();
  }
  return out;
}

Eigen::MatrixXd sample_skew(const SkewParams& params, int n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_skew(params, n, rng);
}

}  // namespace skewcwm
