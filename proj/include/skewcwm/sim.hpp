#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "skewcwm/em.hpp"
#include "skewcwm/funbasis.hpp"
#include "skewcwm/skewdist.hpp"

namespace skewcwm {

/// Generating law of one simulated cluster. Coefficients follow
/// c_X ~ `x` and c_Y = intercept + slope * G c_X + e with e ~ `residual`.
struct ScenarioCluster {
  SkewParams x;
  Eigen::MatrixXd slope;      // R_Y x R_X
  Eigen::VectorXd intercept;  // R_Y
  SkewParams residual;        // location zero
};

struct Scenario {
  std::string name = "custom";
  int n = 600;
  Eigen::VectorXd pi;
  std::vector<ScenarioCluster> clusters;
  int n_basis = 6;
  int degree = 3;
  int grid_points = 101;
  double lower = 0.0;
  double upper = 1.0;

  int n_clusters() const noexcept { return static_cast<int>(clusters.size()); }
  BSplineBasis basis() const { return BSplineBasis::uniform(n_basis, degree, lower, upper); }
  void validate() const;
};

/// Names accepted by builtin_scenario: "NIG-VG", "NIG-NIG", "ST-ST", "VG-VG".
std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(std::string_view name);

struct SimulatedData {
  CurveSet curves;
  FunctionalDataset data;   // coefficients re-estimated from the rendered curves
  std::vector<int> labels;  // 1-based true clusters
  Eigen::MatrixXd cx;       // generating coefficients
  Eigen::MatrixXd cy;
};

SimulatedData simulate(const Scenario& scenario, std::uint64_t seed);

/// Grid holding only the true K and the scenario's families.
SelectionGrid true_model_grid(const Scenario& scenario);

struct BenchmarkOptions {
  int reps = 10;
  std::uint64_t seed = 1;
  SelectionGrid grid;
  EmOptions em;
};

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double ari = 0.0;
  int n_clusters = 0;
  std::vector<double> loglik_trace;
  /// Squared errors of the fitted slopes for each true cluster (empty when the
  /// fitted K differs from the true K).
  std::vector<Eigen::MatrixXd> slope_sq_error;
  double seconds = 0.0;
};

struct BenchmarkSummary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  std::vector<ReplicateOutcome> replicates;
  std::vector<Eigen::MatrixXd> slope_mse;  // per true cluster
};

BenchmarkSummary benchmark(const Scenario& scenario, const BenchmarkOptions& options);

/// Bijection from fitted to true labels (both 1-based) maximizing agreement;
/// result[j - 1] is the true label matched to fitted label j.
std::vector<int> match_labels(const std::vector<int>& fitted, const std::vector<int>& truth, int k_fitted, int k_true);

}  // namespace skewcwm
