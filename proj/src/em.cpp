#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include "skewcwm/em.hpp"
#include "skewcwm/errors.hpp"

namespace skewcwm {
namespace {

constexpr double kMinSigmaEigenvalue = 1e-20;

void log_iteration(std::ostream* log, int iter, double loglik, const Eigen::MatrixXd& t) {
  if (log == nullptr) return;
  const double min_size = t.colwise().sum().minCoeff();
  const auto old_precision = log->precision(17);
  *log << "{\"iter\":" << iter << ",\"loglik\":" << loglik << ",\"min_nk\":" << min_size << "}\n";
  log->precision(old_precision);
}

void check_response_scales(const ClusterModel& model) {
  for (int k = 0; k < model.n_clusters(); ++k) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.y[k].sigma, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < kMinSigmaEigenvalue) {
      throw FitError("response scale matrix of cluster " + std::to_string(k + 1) + " is numerically singular");
    }
  }
}

FitResult run_em(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options, ClusterModel model,
                 std::vector<std::string> warnings) {
  FitResult result;
  StopState stop;
  stop.tol = options.tol;
  stop.max_iter = options.max_iter;

  ESuffStats stats = e_step(data, model);
  result.loglik_trace.push_back(stats.loglik);
  stop.push(stats.loglik);
  log_iteration(options.log, 0, stats.loglik, stats.t);

  int iter = 0;
  while (iter < options.max_iter && stats.n_floored == 0) {
    ++iter;
    model = m_step(data, stats, spec, &model, &warnings, options.min_cluster_size);
    stats = e_step(data, model);
    result.loglik_trace.push_back(stats.loglik);
    stop.push(stats.loglik);
    log_iteration(options.log, iter, stats.loglik, stats.t);
    if (stats.n_floored == 0 && aitken_converged(stop)) {
      result.converged = true;
      break;
    }
  }
  if (stats.n_floored > 0) {
    warnings.push_back("stopped after iteration " + std::to_string(iter) +
                       ": an observation lies on the location of a cluster whose density is unbounded there");
  }
  check_response_scales(model);

  result.model = std::move(model);
  result.posterior = stats.t;
  result.labels = map_classify(stats.t);
  result.loglik = stats.loglik;
  result.n_params = count_free_params(result.model);
  result.bic = bic(result.loglik, result.n_params, data.size());
  result.n_iter = iter;
  result.threshold = spec.dims.fixed ? 0.0 : spec.dims.threshold;
  result.seed = options.seed;
  result.warnings = std::move(warnings);
  return result;
}

void validate_spec(const FunctionalDataset& data, const ModelSpec& spec) {
  if (spec.n_clusters < 1) throw DomainError("K must be at least 1");
  if (spec.n_clusters > data.size()) throw DomainError("K exceeds the number of observations");
  if (data.rx() < 2) throw ModelError("the covariate side needs at least two basis coefficients");
}

// One EM start from given responsibilities.
FitResult start_from(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options,
                     const Eigen::MatrixXd& t0) {
  std::vector<std::string> warnings;
  ClusterModel model = initial_model(data, t0, spec, options, &warnings);
  return run_em(data, spec, options, std::move(model), std::move(warnings));
}

std::string describe_failure(int start, const std::exception& e) {
  return "start " + std::to_string(start + 1) + ": " + e.what();
}

}  // namespace

void StopState::push(double loglik) {
  history.push_back(loglik);
  while (history.size() > 3) history.pop_front();
}

bool aitken_converged(const StopState& state) {
  if (state.history.size() < 3) return false;
  const double l0 = state.history[state.history.size() - 3];
  const double l1 = state.history[state.history.size() - 2];
  const double l2 = state.history[state.history.size() - 1];
  const double previous_step = l1 - l0;
  const double step = l2 - l1;
  if (std::abs(previous_step) < 1e-14) return true;
  const double rate = step / previous_step;
  if (rate >= 1.0) return false;
  const double limit = l1 + step / (1.0 - rate);
  return std::abs(limit - l1) < state.tol;
}

double bic(double loglik, int n_params, int n) {
  if (n < 1) throw DomainError("bic: n must be positive");
  return loglik - 0.5 * n_params * std::log(static_cast<double>(n));
}

std::vector<int> map_classify(const Eigen::MatrixXd& t) {
  std::vector<int> labels(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < t.cols(); ++k) {
      if (t(i, k) > t(i, best)) best = k;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return labels;
}

FitResult fit_from(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options,
                   const Eigen::MatrixXd& initial_t) {
  validate_spec(data, spec);
  return start_from(data, spec, options, initial_t);
}

FitResult fit(const FunctionalDataset& data, const ModelSpec& spec, const EmOptions& options) {
  validate_spec(data, spec);
  std::optional<FitResult> best;
  std::string causes;
  for (int s = 0; s < std::max(1, options.n_starts); ++s) {
    try {
      const Eigen::MatrixXd t0 = initialize(data, spec.n_clusters, options.init, options.seed + s, options.kmeans_restarts);
      FitResult candidate = start_from(data, spec, options, t0);
      candidate.seed = options.seed + s;
      if (!best || candidate.bic > best->bic) best = std::move(candidate);
    } catch (const std::exception& e) {
      causes += (causes.empty() ? "" : "; ") + describe_failure(s, e);
    }
  }
  if (!best) throw FitError("all starts failed: " + causes);
  return std::move(*best);
}

FitResult select_model(const FunctionalDataset& data, const SelectionGrid& grid, const EmOptions& options) {
  if (grid.n_clusters.empty() || grid.families.empty() || grid.parsimony.empty() ||
      (!grid.fixed_dim && grid.thresholds.empty())) {
    throw DomainError("select_model: every grid must be nonempty");
  }
  const std::vector<double> thresholds = grid.fixed_dim ? std::vector<double>{0.0} : grid.thresholds;
  const int n_starts = std::max(1, options.n_starts);

  std::optional<FitResult> best;
  std::vector<BicRow> table;
  for (int k : grid.n_clusters) {
    // Hard starting partitions depend only on K and the start index.
    std::vector<std::optional<Eigen::MatrixXd>> starts(static_cast<std::size_t>(n_starts));
    std::vector<std::string> start_errors(static_cast<std::size_t>(n_starts));
    for (int s = 0; s < n_starts; ++s) {
      try {
        starts[s] = initialize(data, k, options.init, options.seed + s, options.kmeans_restarts);
      } catch (const std::exception& e) {
        start_errors[s] = describe_failure(s, e);
      }
    }
    for (const auto& [x_kind, y_kind] : grid.families) {
      for (const ParsimonyConfig& parsimony : grid.parsimony) {
        // With dimensions frozen after initialization, thresholds that pick the
        // same starting dimensions lead to the same fit.
        std::map<std::pair<int, std::vector<int>>, FitResult> done;
        for (double threshold : thresholds) {
          ModelSpec spec{k, x_kind, y_kind, parsimony, DimensionRule{threshold, grid.fixed_dim, grid.reselect_each_iteration}};
          BicRow row;
          row.n_clusters = k;
          row.x_kind = x_kind;
          row.y_kind = y_kind;
          row.parsimony = parsimony;
          row.threshold = threshold;
          std::optional<FitResult> cell;
          std::string causes;
          for (int s = 0; s < n_starts; ++s) {
            if (!starts[s]) {
              causes += (causes.empty() ? "" : "; ") + start_errors[s];
              continue;
            }
            try {
              validate_spec(data, spec);
              std::vector<std::string> warnings;
              ClusterModel init = initial_model(data, *starts[s], spec, options, &warnings);
              const auto key = std::make_pair(s, init.dims());
              FitResult candidate;
              if (auto it = done.find(key); it != done.end() && !grid.reselect_each_iteration) {
                candidate = it->second;
              } else {
                candidate = run_em(data, spec, options, std::move(init), std::move(warnings));
                candidate.seed = options.seed + s;
                done.emplace(key, candidate);
              }
              candidate.threshold = grid.fixed_dim ? 0.0 : threshold;
              if (!cell || candidate.bic > cell->bic) cell = std::move(candidate);
            } catch (const std::exception& e) {
              causes += (causes.empty() ? "" : "; ") + describe_failure(s, e);
            }
          }
          if (cell) {
            row.ok = true;
            row.loglik = cell->loglik;
            row.bic = cell->bic;
            row.n_params = cell->n_params;
            row.n_iter = cell->n_iter;
            if (!best || cell->bic > best->bic) best = std::move(cell);
          } else {
            row.error = causes;
          }
          table.push_back(std::move(row));
        }
      }
    }
  }
  if (!best) {
    std::string causes;
    for (const auto& row : table) causes += (causes.empty() ? "" : "; ") + row.error;
    throw FitError("every model in the grid failed: " + causes);
  }
  best->bic_table = std::move(table);
  return std::move(*best);
}

}  // namespace skewcwm
