#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "skewcwm/skewdist.hpp"

namespace skewcwm {

/// Constraint pattern on the X-side subspace covariance. The name lists which
/// of the subspace variances (a), noise variance (b), orientation (Q) and
/// intrinsic dimension (D) vary across clusters: `Akj` per cluster and per
/// dimension, `Ak` one value per cluster, `A` one shared value; likewise `Bk`/`B`.
enum class FlmVariant { AkjBkQkDk, AkjBQkDk, AkBkQkDk, AkBQkDk, ABkQkDk, ABQkDk };

/// Eigen-decomposition families for the response scatter matrices
/// (volume, shape, orientation: E = equal across clusters, V = varying, I = identity).
enum class SigmaFamily { EII, VII, EEI, VEI, EVI, VVI, EEE, VVV };

std::string_view variant_name(FlmVariant v);
FlmVariant parse_flm_variant(std::string_view name);
std::string_view sigma_family_name(SigmaFamily f);
SigmaFamily parse_sigma_family(std::string_view name);

struct ParsimonyConfig {
  FlmVariant flm = FlmVariant::AkjBkQkDk;
  SigmaFamily sigma_y = SigmaFamily::VVV;
  bool common_concentration_x = false;
  bool common_concentration_y = false;

  friend bool operator==(const ParsimonyConfig&, const ParsimonyConfig&) = default;
};

/// Covariate-side parameters of one cluster. The scale matrix in coefficient
/// space is G^{-1/2} (U diag(a) U' + b (I - U U')) G^{-1/2}, with G the Gram matrix.
struct XClusterParams {
  Eigen::VectorXd mu;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd orientation;  // R_X x d, orthonormal columns
  Eigen::VectorXd a;            // descending, length d
  double b = 1.0;
  SkewFamily family;

  int d() const noexcept { return static_cast<int>(a.size()); }
  void validate(int rx) const;
};

/// Response-side parameters of one cluster: c_Y = [Gamma | gamma_0] (G c_X, 1) + residual.
struct YClusterParams {
  Eigen::MatrixXd regression;  // R_Y x (R_X + 1), intercept in the last column
  Eigen::VectorXd alpha;
  Eigen::MatrixXd sigma;
  SkewFamily family;

  void validate(int rx, int ry) const;
};

struct ClusterModel {
  Eigen::VectorXd pi;
  std::vector<XClusterParams> x;
  std::vector<YClusterParams> y;
  ParsimonyConfig parsimony;

  int n_clusters() const noexcept { return static_cast<int>(pi.size()); }
  int rx() const { return static_cast<int>(x.front().mu.size()); }
  int ry() const { return static_cast<int>(y.front().alpha.size()); }
  std::vector<int> dims() const;
  /// Throws ModelError when any invariant fails.
  void validate() const;
};

/// Everything needed to count free parameters.
struct ModelShape {
  int n_clusters;
  int rx;
  int ry;
  std::vector<int> dims;
  ParsimonyConfig parsimony;
};

int count_free_params(const ModelShape& shape);
int count_free_params(const ClusterModel& model);

/// Projects per-cluster scatter matrices (sum over members of weighted outer
/// products, so that scatter / n_k is the unconstrained estimate) onto a family.
std::vector<Eigen::MatrixXd> sigma_y_project(std::span<const Eigen::MatrixXd> scatter,
                                             std::span<const double> sizes, SigmaFamily family);

/// One row of a model-selection table.
struct BicRow {
  int n_clusters = 0;
  SkewKind x_kind = SkewKind::NormalInverseGaussian;
  SkewKind y_kind = SkewKind::NormalInverseGaussian;
  ParsimonyConfig parsimony;
  double threshold = 0.0;
  bool ok = false;
  double loglik = 0.0;
  double bic = 0.0;
  int n_params = 0;
  int n_iter = 0;
  std::string error;
};

struct FitResult {
  ClusterModel model;
  Eigen::MatrixXd posterior;  // n x K
  std::vector<int> labels;    // 1-based cluster labels
  std::vector<double> loglik_trace;
  double loglik = 0.0;
  double bic = 0.0;
  int n_params = 0;
  int n_iter = 0;
  bool converged = false;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::vector<BicRow> bic_table;
};

}  // namespace skewcwm
