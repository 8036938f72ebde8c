#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "skewcwm/funbasis.hpp"
#include "skewcwm/model.hpp"
#include "skewcwm/skewdist.hpp"

namespace skewcwm {

/// Posterior responsibilities and conditional moments of the latent mixing
/// weights, all n x K.
struct ESuffStats {
  Eigen::MatrixXd t;
  Eigen::MatrixXd w_x, wi_x, lw_x;
  Eigen::MatrixXd w_y, wi_y, lw_y;
  double loglik = 0.0;
  /// Observation/cluster sides whose latent moments were computed at a floored
  /// Mahalanobis distance. This happens only when an observation sits on the
  /// location of a cluster whose density is unbounded there, and the moments are
  /// then no longer the exact posterior ones.
  int n_floored = 0;
};

/// How the intrinsic dimension of each cluster subspace is chosen.
struct DimensionRule {
  /// Scree-test threshold, used when `fixed` is empty.
  double threshold = 0.2;
  /// Use this dimension for every cluster instead of the scree test.
  std::optional<int> fixed;
  /// Re-run the scree test at every M-step. When false the dimensions chosen
  /// at initialization are kept, which preserves monotone EM ascent.
  bool reselect_each_iteration = false;
};

/// What to fit: number of clusters, mixing families and constraints.
struct ModelSpec {
  int n_clusters = 2;
  SkewKind x_kind = SkewKind::NormalInverseGaussian;
  SkewKind y_kind = SkewKind::NormalInverseGaussian;
  ParsimonyConfig parsimony;
  DimensionRule dims;
};

enum class InitStrategy { KMeans, Random };

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-6;
  InitStrategy init = InitStrategy::KMeans;
  int kmeans_restarts = 20;
  int n_starts = 1;
  std::uint64_t seed = 0;
  double initial_skewness = 10.0;
  double initial_concentration = 10.0;
  /// Smallest allowed effective cluster size.
  double min_cluster_size = 2.0;
  /// When set, one line per iteration is written here.
  std::ostream* log = nullptr;
};

/// Log-likelihood history used by the stopping rule.
struct StopState {
  std::deque<double> history;
  double tol = 1e-6;
  int max_iter = 200;

  void push(double loglik);
};

/// Log of pi_k f_X(c_x) f_Y(c_y | c_x) with the constants
/// (R_X + R_Y)/2 log(2 pi) and (1/2) log|G| removed, where G is the Gram matrix.
double h_k(const Eigen::VectorXd& c_y, const Eigen::VectorXd& c_x, const XClusterParams& x,
           const YClusterParams& y, double pi_k, const Eigen::MatrixXd& gram_x, const Eigen::MatrixXd& gram_x_sqrt);

/// Full covariate-side scale matrix in coefficient space.
Eigen::MatrixXd x_scale_matrix(const XClusterParams& x, const Eigen::MatrixXd& gram_x_sqrt);

/// E-step, parallel over observations.
ESuffStats e_step(const FunctionalDataset& data, const ClusterModel& model);

/// Reference E-step evaluated on one thread in observation order.
ESuffStats e_step_serial(const FunctionalDataset& data, const ClusterModel& model);

/// Observed-data log-likelihood.
double log_likelihood(const FunctionalDataset& data, const ClusterModel& model);

/// M-step. Dimensions come from `previous` when given and the rule does not ask
/// for re-selection; otherwise from the rule. Warnings are appended when non-null.
ClusterModel m_step(const FunctionalDataset& data, const ESuffStats& stats, const ModelSpec& spec,
                    const ClusterModel* previous = nullptr, std::vector<std::string>* warnings = nullptr,
                    double min_cluster_size = 2.0);

/// Starting parameters from hard assignments: weighted means and covariances,
/// a constant skewness vector and a constant concentration.
ClusterModel initial_model(const FunctionalDataset& data, const Eigen::MatrixXd& t, const ModelSpec& spec,
                           const EmOptions& options, std::vector<std::string>* warnings = nullptr);

struct ConcentrationSolution {
  double value;
  bool clamped;
};

/// Maximizes the concentration given the averaged latent statistic:
/// variance-gamma: mean(E[log W]) - mean(E[W]);
/// skew-t: mean(E[log W]) + mean(E[1/W]);
/// NIG: mean(E[W]).
ConcentrationSolution solve_concentration(SkewKind kind, double statistic);

bool aitken_converged(const StopState& state);

/// Intrinsic dimension by the scree test on descending eigenvalues.
int cattell_select(const Eigen::VectorXd& eigenvalues, double threshold);

/// Hard assignments (one-hot rows).
Eigen::MatrixXd initialize(const FunctionalDataset& data, int n_clusters, InitStrategy strategy, std::uint64_t seed,
                           int kmeans_restarts = 20);

/// Lloyd's algorithm with k-means++ seeding; returns 0-based cluster indices.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int n_clusters, int restarts, std::uint64_t seed);

FitResult fit(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options);

/// Runs EM from the given responsibilities (a single start).
FitResult fit_from(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options,
                   const Eigen::MatrixXd& initial_t);

struct SelectionGrid {
  std::vector<int> n_clusters{2};
  std::vector<std::pair<SkewKind, SkewKind>> families{{SkewKind::NormalInverseGaussian, SkewKind::NormalInverseGaussian}};
  std::vector<ParsimonyConfig> parsimony{ParsimonyConfig{}};
  std::vector<double> thresholds{0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::optional<int> fixed_dim;
  bool reselect_each_iteration = false;
};

/// Exhaustive search over the grid; the best fit carries the full BIC table.
FitResult select_model(const FunctionalDataset& data, const SelectionGrid& grid, const EmOptions& options);

double bic(double loglik, int n_params, int n);

/// Row-wise arg max of the posterior as 1-based labels; ties go to the lowest index.
std::vector<int> map_classify(const Eigen::MatrixXd& t);

}  // namespace skewcwm
