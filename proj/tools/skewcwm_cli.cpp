// Command-line front end: fit, simulate, benchmark, plotdata and score.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "skewcwm/errors.hpp"
#include "skewcwm/eval.hpp"
#include "skewcwm/io.hpp"
#include "skewcwm/sim.hpp"

namespace fs = std::filesystem;
using namespace skewcwm;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

struct Common {
  bool verbose = false;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string config;
};

RunConfig load_config(const Common& common) {
  RunConfig cfg = common.config.empty() ? RunConfig{} : load_run_config(common.config);
  if (common.seed) cfg.em.seed = *common.seed;
  if (common.verbose) cfg.em.log = &std::cerr;
  return cfg;
}

void run_fit(const Common& common, const std::string& curves_path, const fs::path& out_dir) {
  const RunConfig cfg = load_config(common);
  const CurveSet curves = read_curves_csv(curves_path);
  const auto [x_bases, y_bases] = make_bases(cfg, curves);
  const FunctionalDataset data = fit_coefficients(curves, x_bases, y_bases);
  const FitResult result = select_model(data, cfg.grid, cfg.em);
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';

  ensure_dir(out_dir);
  auto json_out = open_output(out_dir / "result.json");
  json_out << result_to_json(result, data).dump(1) << '\n';
  auto labels_out = open_output(out_dir / "labels.csv");
  write_labels_csv(labels_out, data.ids, result);
  auto bic_out = open_output(out_dir / "bic_table.csv");
  write_bic_table_csv(bic_out, result.bic_table);
  std::cerr << "K=" << result.model.n_clusters() << " loglik=" << format_double(result.loglik)
            << " bic=" << format_double(result.bic) << " iterations=" << result.n_iter
            << (result.converged ? "" : " (not converged)") << '\n';
}

void run_simulate(const Common& common, const std::string& scenario_name, int n, const fs::path& out_dir) {
  Scenario scenario = builtin_scenario(scenario_name);
  if (n > 0) scenario.n = n;
  const SimulatedData sim = simulate(scenario, common.seed.value_or(1));
  ensure_dir(out_dir);
  auto curves_out = open_output(out_dir / "curves.csv");
  write_curves_csv(curves_out, sim.curves);
  auto truth_out = open_output(out_dir / "truth.csv");
  write_truth_csv(truth_out, sim.curves.ids, sim.labels);
}

void run_benchmark(const Common& common, const std::string& scenario_name, int reps, int n, const fs::path& out_dir) {
  Scenario scenario = builtin_scenario(scenario_name);
  if (n > 0) scenario.n = n;
  BenchmarkOptions options;
  options.reps = reps;
  options.seed = common.seed.value_or(1);
  if (common.config.empty()) {
    options.grid = true_model_grid(scenario);
  } else {
    const RunConfig cfg = load_config(common);
    options.grid = cfg.grid;
    options.em = cfg.em;
  }
  if (common.verbose) options.em.log = &std::cerr;
  const BenchmarkSummary summary = benchmark(scenario, options);
  ensure_dir(out_dir);
  auto summary_out = open_output(out_dir / "ari_summary.csv");
  auto mse_out = open_output(out_dir / "gamma_mse.csv");
  auto rep_out = open_output(out_dir / "ari_replicates.csv");
  write_benchmark_csv(summary_out, mse_out, rep_out, scenario.name, summary);
  std::cerr << scenario.name << ": mean ARI " << format_double(summary.mean) << " (sd " << format_double(summary.sd)
            << ")\n";
}

void run_plotdata(const std::string& result_path, int grid_points, const std::string& out_path) {
  std::ifstream in(result_path);
  if (!in) throw InputError("cannot open " + result_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(result_path + ": " + e.what());
  }
  const StoredResult stored = stored_result_from_json(j);
  if (out_path.empty() || out_path == "-") {
    write_mean_curves_csv(std::cout, stored, grid_points);
  } else {
    auto out = open_output(out_path);
    write_mean_curves_csv(out, stored, grid_points);
  }
}

void run_score(const std::string& labels_path, const std::string& truth_path) {
  const auto fitted = read_labels_csv(labels_path);
  const auto truth = read_labels_csv(truth_path);
  std::map<std::string, int> truth_by_id(truth.begin(), truth.end());
  if (truth_by_id.size() != truth.size()) throw InputError(truth_path + ": repeated curve_id");
  std::vector<int> a;
  std::vector<int> b;
  for (const auto& [id, label] : fitted) {
    const auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) throw InputError("curve " + id + " is missing from " + truth_path);
    a.push_back(label);
    b.push_back(it->second);
  }
  if (a.size() != truth.size()) throw InputError("label files cover different curves");
  std::cout << "ari," << format_double(ari(a, b)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering of paired functional data with skewed functional linear regression mixtures"};
  app.require_subcommand(1);
  Common common;
  app.add_flag("-v,--verbose", common.verbose, "Write one JSON line per EM iteration to standard error");
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--threads", common.threads, "Maximum number of worker threads (0 keeps the runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config", common.config, "JSON run configuration")->check(CLI::ExistingFile);

  std::string curves_path;
  std::string out_dir = ".";
  auto* fit_cmd = app.add_subcommand("fit", "Fit and select a model; writes result.json, labels.csv, bic_table.csv");
  fit_cmd->add_option("curves", curves_path, "Long-format curve CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("-o,--out", out_dir, "Output directory");

  std::string scenario = "NIG-NIG";
  int n = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a built-in scenario; writes curves.csv and truth.csv");
  sim_cmd->add_option("scenario", scenario, "NIG-VG, NIG-NIG, ST-ST or VG-VG");
  sim_cmd->add_option("-n", n, "Number of curves (default 600)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("-o,--out", out_dir, "Output directory");

  int reps = 10;
  auto* bench_cmd = app.add_subcommand(
      "benchmark", "Replicated simulate-and-fit; writes ari_summary.csv, gamma_mse.csv, ari_replicates.csv");
  bench_cmd->add_option("scenario", scenario, "NIG-VG, NIG-NIG, ST-ST or VG-VG");
  bench_cmd->add_option("-r,--reps", reps, "Number of replicates")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-n", n, "Curves per replicate (default 600)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-o,--out", out_dir, "Output directory");

  std::string result_path;
  std::string plot_out;
  int grid_points = 101;
  auto* plot_cmd = app.add_subcommand("plotdata", "Per-cluster mean curves from a result.json");
  plot_cmd->add_option("result", result_path, "result.json written by fit")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-g,--grid", grid_points, "Grid points per variable")->check(CLI::Range(2, 1000000));
  plot_cmd->add_option("-o,--out", plot_out, "Output CSV (standard output when omitted)");

  std::string labels_path;
  std::string truth_path;
  auto* score_cmd = app.add_subcommand("score", "Adjusted Rand index between two label files");
  score_cmd->add_option("labels", labels_path, "curve_id,label CSV")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("truth", truth_path, "curve_id,label CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (common.threads > 0) omp_set_num_threads(common.threads);
  try {
    // A malformed configuration is rejected even by commands that do not use it.
    if (!common.config.empty()) (void)load_run_config(common.config);
    if (*fit_cmd) {
      run_fit(common, curves_path, out_dir);
    } else if (*sim_cmd) {
      run_simulate(common, scenario, n, out_dir);
    } else if (*bench_cmd) {
      run_benchmark(common, scenario, reps, n, out_dir);
    } else if (*plot_cmd) {
      run_plotdata(result_path, grid_points, plot_out);
    } else if (*score_cmd) {
      run_score(labels_path, truth_path);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
