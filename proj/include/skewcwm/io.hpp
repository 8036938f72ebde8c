#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewcwm/em.hpp"
#include "skewcwm/funbasis.hpp"
#include "skewcwm/model.hpp"
#include "skewcwm/sim.hpp"

namespace skewcwm {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Reads long-format curves: header `curve_id,variable,role,t,value`, role X or Y.
/// Samples of a curve may appear in any order; they are sorted by time.
CurveSet parse_curves_csv(std::istream& in, const std::string& source = "<input>");
CurveSet read_curves_csv(const std::filesystem::path& path);
void write_curves_csv(std::ostream& out, const CurveSet& curves);

void write_truth_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels);

/// Reads `curve_id,label[,...]` files such as truth.csv, labels.csv or labels produced by other methods.
/// Extra columns are ignored.
std::vector<std::pair<std::string, int>> parse_labels_csv(std::istream& in, const std::string& source = "<input>");
std::vector<std::pair<std::string, int>> read_labels_csv(const std::filesystem::path& path);

/// Basis settings for one variable; unset bounds are taken from the observed times.
/// Explicit interior knots override the equally spaced layout implied by `n_basis`.
struct BasisConfig {
  int n_basis = 6;
  int degree = 3;
  std::optional<std::vector<double>> interior_knots;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct RunConfig {
  BasisConfig basis;
  std::map<std::string, BasisConfig> variable_basis;
  SelectionGrid grid;
  EmOptions em;
};

/// Parses a configuration object; unknown keys and malformed values raise InputError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds one basis per variable from the configuration and the observed sampling times.
std::pair<std::vector<BSplineBasis>, std::vector<BSplineBasis>> make_bases(const RunConfig& config,
                                                                           const CurveSet& curves);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

/// Full fitted model, posterior and the smoothed data it was fitted to.
nlohmann::json result_to_json(const FitResult& result, const FunctionalDataset& data);

/// Data and labels read back from a result document.
struct StoredResult {
  FunctionalDataset data;
  std::vector<int> labels;
  int n_clusters = 0;
};
StoredResult stored_result_from_json(const nlohmann::json& j);

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const FitResult& result);
void write_bic_table_csv(std::ostream& out, const std::vector<BicRow>& table);

/// Per-cluster mean curves on `grid_points` equally spaced times for every variable.
void write_mean_curves_csv(std::ostream& out, const StoredResult& stored, int grid_points);

void write_benchmark_csv(std::ostream& summary_out, std::ostream& mse_out, std::ostream& replicates_out,
                         const std::string& scenario, const BenchmarkSummary& summary);

}  // namespace skewcwm
