#include "skewcwm/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "skewcwm/errors.hpp"
#include "skewcwm/eval.hpp"
#include "skewcwm/random.hpp"

namespace skewcwm {

void Scenario::validate() const {
  if (n < 1) throw ModelError("scenario needs at least one curve");
  if (clusters.empty() || pi.size() != static_cast<Eigen::Index>(clusters.size())) {
    throw ModelError("scenario needs one mixing weight per cluster");
  }
  if ((pi.array() <= 0.0).any() || std::abs(pi.sum() - 1.0) > 1e-10) {
    throw ModelError("scenario mixing weights must be positive and sum to one");
  }
  if (grid_points < n_basis) throw ModelError("scenario grid is too coarse for the basis");
  for (const auto& c : clusters) {
    c.x.validate();
    c.residual.validate();
    if (c.x.dim() != n_basis || c.residual.dim() != n_basis) {
      throw ModelError("scenario coefficient laws must match the basis size");
    }
    if (c.slope.rows() != n_basis || c.slope.cols() != n_basis || c.intercept.size() != n_basis) {
      throw ModelError("scenario regression has the wrong shape");
    }
    if (!c.residual.mu.isZero(0.0)) throw ModelError("scenario residual law must have zero location");
  }
}

SimulatedData simulate(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const BSplineBasis basis = scenario.basis();
  const Eigen::MatrixXd gram = gram_matrix(basis);
  const int r = scenario.n_basis;

  std::vector<double> grid(static_cast<std::size_t>(scenario.grid_points));
  for (int j = 0; j < scenario.grid_points; ++j) {
    grid[static_cast<std::size_t>(j)] =
        scenario.lower + (scenario.upper - scenario.lower) * j / (scenario.grid_points - 1);
  }
  const Eigen::MatrixXd design = basis.evaluate(grid);

  Rng rng(seed);
  SimulatedData out;
  out.cx.resize(scenario.n, r);
  out.cy.resize(scenario.n, r);
  out.labels.resize(static_cast<std::size_t>(scenario.n));
  for (int i = 0; i < scenario.n; ++i) {
    const int k = rng.categorical(scenario.pi);
    const ScenarioCluster& c = scenario.clusters[static_cast<std::size_t>(k)];
    const Eigen::VectorXd cx = sample_skew(c.x, 1, rng).row(0).transpose();
    const Eigen::VectorXd noise = sample_skew(c.residual, 1, rng).row(0).transpose();
    out.cx.row(i) = cx.transpose();
    out.cy.row(i) = (c.intercept + c.slope * (gram * cx) + noise).transpose();
    out.labels[static_cast<std::size_t>(i)] = k + 1;
  }

  CurveSet& curves = out.curves;
  curves.x_names = {"X1"};
  curves.y_names = {"Y1"};
  for (int i = 0; i < scenario.n; ++i) {
    curves.ids.push_back(std::to_string(i + 1));
    const Eigen::VectorXd xv = design * out.cx.row(i).transpose();
    const Eigen::VectorXd yv = design * out.cy.row(i).transpose();
    curves.x.push_back({Curve{grid, std::vector<double>(xv.data(), xv.data() + xv.size())}});
    curves.y.push_back({Curve{grid, std::vector<double>(yv.data(), yv.data() + yv.size())}});
  }
  out.data = fit_coefficients(curves, {basis}, {basis});
  return out;
}

SelectionGrid true_model_grid(const Scenario& scenario) {
  SelectionGrid grid;
  grid.n_clusters = {scenario.n_clusters()};
  grid.families = {{scenario.clusters.front().x.family.kind, scenario.clusters.front().residual.family.kind}};
  return grid;
}

std::vector<int> match_labels(const std::vector<int>& fitted, const std::vector<int>& truth, int k_fitted,
                              int k_true) {
  if (fitted.size() != truth.size()) throw DomainError("match_labels: length mismatch");
  const int m = std::max(k_fitted, k_true);
  Eigen::MatrixXi agree = Eigen::MatrixXi::Zero(m, m);
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (fitted[i] < 1 || fitted[i] > k_fitted || truth[i] < 1 || truth[i] > k_true) {
      throw DomainError("match_labels: label out of range");
    }
    ++agree(fitted[i] - 1, truth[i] - 1);
  }
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  int best_score = -1;
  do {
    int score = 0;
    for (int j = 0; j < m; ++j) score += agree(j, perm[static_cast<std::size_t>(j)]);
    if (score > best_score) best_score = score, best = perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<int> out(static_cast<std::size_t>(k_fitted));
  for (int j = 0; j < k_fitted; ++j) out[static_cast<std::size_t>(j)] = best[static_cast<std::size_t>(j)] + 1;
  return out;
}

BenchmarkSummary benchmark(const Scenario& scenario, const BenchmarkOptions& options) {
  if (options.reps < 1) throw DomainError("benchmark: at least one replicate is required");
  const int k_true = scenario.n_clusters();
  const int r = scenario.n_basis;
  BenchmarkSummary summary;
  summary.slope_mse.assign(static_cast<std::size_t>(k_true), Eigen::MatrixXd::Zero(r, r));
  std::vector<int> mse_counts(static_cast<std::size_t>(k_true), 0);
  std::vector<double> scores;

  for (int rep = 0; rep < options.reps; ++rep) {
    ReplicateOutcome outcome;
    outcome.seed = options.seed + static_cast<std::uint64_t>(rep);
    const auto start = std::chrono::steady_clock::now();
    try {
      const SimulatedData sim = simulate(scenario, outcome.seed);
      EmOptions em = options.em;
      em.seed = outcome.seed;
      const FitResult result = select_model(sim.data, options.grid, em);
      outcome.ok = true;
      outcome.ari = ari(result.labels, sim.labels);
      outcome.n_clusters = result.model.n_clusters();
      outcome.loglik_trace = result.loglik_trace;
      if (outcome.n_clusters == k_true) {
        const std::vector<int> matched = match_labels(result.labels, sim.labels, k_true, k_true);
        outcome.slope_sq_error.resize(static_cast<std::size_t>(k_true));
        for (int j = 0; j < k_true; ++j) {
          const int truth = matched[static_cast<std::size_t>(j)] - 1;
          const Eigen::MatrixXd fitted = result.model.y[static_cast<std::size_t>(j)].regression.leftCols(r);
          const Eigen::MatrixXd err =
              (fitted - scenario.clusters[static_cast<std::size_t>(truth)].slope).array().square().matrix();
          outcome.slope_sq_error[static_cast<std::size_t>(truth)] = err;
          summary.slope_mse[static_cast<std::size_t>(truth)] += err;
          ++mse_counts[static_cast<std::size_t>(truth)];
        }
      }
      scores.push_back(outcome.ari);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    summary.replicates.push_back(std::move(outcome));
  }
  for (int k = 0; k < k_true; ++k) {
    if (mse_counts[static_cast<std::size_t>(k)] > 0) {
      summary.slope_mse[static_cast<std::size_t>(k)] /= mse_counts[static_cast<std::size_t>(k)];
    } else {
      summary.slope_mse[static_cast<std::size_t>(k)].setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (scores.empty()) {
    summary.mean = summary.sd = summary.median = std::numeric_limits<double>::quiet_NaN();
    return summary;
  }
  const double count = static_cast<double>(scores.size());
  summary.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / count;
  double ss = 0.0;
  for (double s : scores) ss += (s - summary.mean) * (s - summary.mean);
  summary.sd = scores.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  summary.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return summary;
}

}  // namespace skewcwm
