#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Core>

#include "skewcwm/random.hpp"

namespace skewcwm {

/// The three normal variance-mean mixtures supported by the model.
enum class SkewKind { VarianceGamma, SkewT, NormalInverseGaussian };

/// A skewed family together with its concentration parameter:
/// psi for variance-gamma, nu (degrees of freedom) for skew-t, kappa for NIG.
struct SkewFamily {
  SkewKind kind = SkewKind::NormalInverseGaussian;
  double concentration = 1.0;

  static SkewFamily variance_gamma(double psi);
  static SkewFamily skew_t(double nu);
  static SkewFamily normal_inverse_gaussian(double kappa);
  static SkewFamily make(SkewKind kind, double concentration);

  void validate() const;
  friend bool operator==(const SkewFamily&, const SkewFamily&) = default;
};

/// Short name used in files: "VG", "ST" or "NIG".
std::string_view kind_name(SkewKind kind);

/// Inverse of kind_name; throws InputError on an unknown name.
SkewKind parse_skew_kind(std::string_view name);

/// Generalized inverse Gaussian law with density proportional to
/// w^(lambda-1) exp(-(a w + b / w) / 2).
struct GigParams {
  double a;
  double b;
  double lambda;
  /// Throws DomainError unless a > 0, b >= 0, and lambda > 0 whenever b == 0.
  GigParams(double a, double b, double lambda);
};

struct GigMoments {
  double e_w;
  double e_inv_w;
  double e_log_w;
};

/// E[W], E[1/W] and E[log W] for W ~ GIG(a, b, lambda). b == 0 uses the gamma limit.
GigMoments gig_expectations(const GigParams& gig);

/// As gig_expectations, also accepting a == 0 with lambda < 0 (the inverse gamma limit).
GigMoments latent_moments(double a, double b, double lambda);

/// Constants that express all three mixture densities through one formula.
struct UnifiedConstants {
  double p1;
  double p2;
  double p3;
  double p4;
};

UnifiedConstants unified_constants(const SkewFamily& family, int dim);

/// Location, skewness, scale and mixing law of a multivariate skewed vector.
struct SkewParams {
  Eigen::VectorXd mu;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd sigma;
  SkewFamily family;

  int dim() const { return static_cast<int>(mu.size()); }
  /// Throws ModelError on inconsistent sizes or a non-SPD scale matrix.
  void validate() const;
};

/// Quadratic forms entering the density at one point:
/// delta = (v-mu)' S^-1 (v-mu), rho = alpha' S^-1 alpha, cross = (v-mu)' S^-1 alpha.
struct QuadraticForms {
  double delta;
  double rho;
  double cross;
  double log_det;
  int dim;
};

/// Log density expressed through the quadratic forms and family constants.
double unified_log_density(const QuadraticForms& q, const UnifiedConstants& c);

QuadraticForms quadratic_forms(const Eigen::VectorXd& v, const SkewParams& params);

double skew_log_density(const Eigen::VectorXd& v, const SkewParams& params);

/// Posterior law of the latent mixing weight given an observation.
GigParams conditional_gig(const Eigen::VectorXd& v, const SkewParams& params);

/// Mixing weight W drawn from the family's mixing law.
double sample_mixing_weight(const SkewFamily& family, Rng& rng);

/// n draws as rows of an n x dim matrix.
Eigen::MatrixXd sample_skew(const SkewParams& params, int n, std::uint64_t seed);
Eigen::MatrixXd sample_skew(const SkewParams& params, int n, Rng& rng);

}  // namespace skewcwm
