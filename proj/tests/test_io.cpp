#include <sstream>

#include <doctest.h>

#include "skewcwm/errors.hpp"
#include "skewcwm/io.hpp"
#include "skewcwm/sim.hpp"

using namespace skewcwm;

namespace {

CurveSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_curves_csv(in, "curves.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

const char* kHeader = "curve_id,variable,role,t,value\n";

}  // namespace

TEST_CASE("shortest round-trip number formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 1e21, 123456789.125}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("curve CSV parsing") {
  const CurveSet c = parse(std::string("\xEF\xBB\xBF") + kHeader +
                           "a,temp,X,0.5,2\n"
                           "a,temp,X,0,1\n"
                           "a,\"load, kW\",y,0,3\n"
                           "b,temp,x,0,4\n"
                           "b,temp,X,1,5\n"
                           "b,\"load, kW\",Y,0.25,6\n");
  CHECK(c.ids == std::vector<std::string>{"a", "b"});
  CHECK(c.x_names == std::vector<std::string>{"temp"});
  CHECK(c.y_names == std::vector<std::string>{"load, kW"});
  CHECK(c.x[0][0].t == std::vector<double>{0.0, 0.5});
  CHECK(c.x[0][0].value == std::vector<double>{1.0, 2.0});
  CHECK(c.y[1][0].t == std::vector<double>{0.25});
}

TEST_CASE("curve CSV errors name the line") {
  CHECK(error_of("id,variable,role,t,value\n").find("curves.csv:1:") != std::string::npos);
  CHECK(error_of("").find("header") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\na,v,X,1\n").find("curves.csv:3:") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,Z,0,1\n").find("curves.csv:2: role") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,zero,1\n").find("curves.csv:2: invalid time") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,nan\n").find("curves.csv:2: invalid value") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\na,w,Y,0,1\nb,v,Y,0,1\n").find("curves.csv:4:") !=
        std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\na,v,X,0,2\na,w,Y,0,1\n").find("curves.csv:3:") !=
        std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\na,\"w,Y,0,1\n").find("curves.csv:3: unterminated") !=
        std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\n").find("no Y variables") != std::string::npos);
  CHECK(error_of(std::string(kHeader) + "a,v,X,0,1\na,w,Y,0,1\nb,v,X,0,1\n").find("curve b") != std::string::npos);
}

TEST_CASE("simulated curves survive a CSV round trip") {
  Scenario s = builtin_scenario("VG-VG");
  s.n = 25;
  const SimulatedData sim = simulate(s, 7);
  std::ostringstream out;
  write_curves_csv(out, sim.curves);
  std::istringstream in(out.str());
  const CurveSet back = parse_curves_csv(in);
  CHECK(back.ids == sim.curves.ids);
  for (int i = 0; i < 25; ++i) {
    CHECK(back.x[i][0].t == sim.curves.x[i][0].t);
    CHECK(back.x[i][0].value == sim.curves.x[i][0].value);
    CHECK(back.y[i][0].value == sim.curves.y[i][0].value);
  }

  RunConfig config;
  const auto [xb, yb] = make_bases(config, back);
  CHECK(xb.front() == s.basis());
  const FunctionalDataset data = fit_coefficients(back, xb, yb);
  CHECK((data.cx - sim.data.cx).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream truth;
  write_truth_csv(truth, sim.curves.ids, sim.labels);
  std::istringstream truth_in(truth.str());
  const auto labels = parse_labels_csv(truth_in);
  REQUIRE(labels.size() == 25);
  for (int i = 0; i < 25; ++i) {
    CHECK(labels[i].first == sim.curves.ids[i]);
    CHECK(labels[i].second == sim.labels[i]);
  }
}

TEST_CASE("run configuration") {
  using nlohmann::json;
  const RunConfig def = parse_run_config(json::object());
  CHECK(def.em.max_iter == 200);
  CHECK(def.em.tol == 1e-6);
  CHECK(def.basis.n_basis == 6);
  CHECK(def.basis.degree == 3);
  CHECK(def.grid.thresholds.size() == 7);

  const RunConfig cfg = parse_run_config(json::parse(R"({
    "basis": {"n_basis": 8, "variables": {"load": {"degree": 2, "knots": [0.3, 0.6]}}},
    "K": [1, 2, 3],
    "families": ["NIG-VG", ["ST", "ST"]],
    "flm_variants": ["AkjBkQkDk", "ABQkDk"],
    "sigma_y_families": ["VVV", "EVI", "EII"],
    "common_concentration_x": [false, true],
    "thresholds": 0.2,
    "n_starts": 3, "seed": 11, "max_iter": 50, "tol": 1e-8, "init": "random"
  })"));
  CHECK(cfg.basis.n_basis == 8);
  CHECK(cfg.variable_basis.at("load").degree == 2);
  CHECK(cfg.variable_basis.at("load").n_basis == 8);
  CHECK(cfg.grid.n_clusters == std::vector<int>{1, 2, 3});
  REQUIRE(cfg.grid.families.size() == 2);
  CHECK(cfg.grid.families[0] == std::pair{SkewKind::NormalInverseGaussian, SkewKind::VarianceGamma});
  CHECK(cfg.grid.families[1] == std::pair{SkewKind::SkewT, SkewKind::SkewT});
  CHECK(cfg.grid.parsimony.size() == 2 * 3 * 2);
  CHECK(cfg.grid.thresholds == std::vector<double>{0.2});
  CHECK(cfg.em.n_starts == 3);
  CHECK(cfg.em.seed == 11);
  CHECK(cfg.em.init == InitStrategy::Random);
  CHECK(parse_run_config(json{{"families", "all"}}).grid.families.size() == 9);

  for (const char* bad : {R"({"K": 0})", R"({"Kmax": 2})", R"({"tol": "small"})", R"({"init": "spectral"})",
                          R"({"families": ["NIG"]})", R"({"families": ["NIG-GH"]})", R"({"thresholds": []})",
                          R"({"basis": {"n_basis": 2}})", R"({"basis": {"order": 3}})", R"({"max_iter": 0})",
                          R"({"flm_variants": ["AkjBk"]})", R"({"fixed_dim": 0})"}) {
    INFO(bad);
    CHECK_THROWS_AS(parse_run_config(json::parse(bad)), InputError);
  }
}

TEST_CASE("matrices and results serialize losslessly") {
  Eigen::MatrixXd m(2, 3);
  m << 1.0 / 3.0, -2e-310, 7.0, 0.1, 1e300, -0.0;
  const auto j = matrix_to_json(m);
  CHECK(j["rows"] == 2);
  CHECK(j["cols"] == 3);
  CHECK(j["data"][1] == -2e-310);
  CHECK(matrix_from_json(j) == m);
  nlohmann::json broken = j;
  broken["rows"] = 4;
  CHECK_THROWS_AS(matrix_from_json(broken), InputError);

  Scenario s = builtin_scenario("NIG-NIG");
  s.n = 80;
  const SimulatedData sim = simulate(s, 3);
  ModelSpec spec;
  spec.dims.fixed = 2;
  EmOptions options;
  options.max_iter = 10;
  options.seed = 3;
  const FitResult r = fit(sim.data, spec, options);
  const auto doc = result_to_json(r, sim.data);
  CHECK(doc["format"] == "skewcwm-result");
  CHECK(doc["K"] == 2);
  CHECK(doc["model"]["clusters"].size() == 2);
  CHECK(doc["loglik"].get<double>() == r.loglik);

  const StoredResult stored = stored_result_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(stored.labels == r.labels);
  CHECK(stored.n_clusters == 2);
  CHECK(stored.data.cx == sim.data.cx);
  CHECK(stored.data.cy == sim.data.cy);
  CHECK(stored.data.x_bases == sim.data.x_bases);
  CHECK(stored.data.ids == sim.data.ids);
  CHECK_THROWS_AS(stored_result_from_json(nlohmann::json{{"format", "other"}}), InputError);

  // Two serializations of the same fit are identical text.
  CHECK(result_to_json(r, sim.data).dump(1) == doc.dump(1));

  std::ostringstream labels_a, labels_b;
  write_labels_csv(labels_a, sim.data.ids, r);
  write_labels_csv(labels_b, sim.data.ids, fit(sim.data, spec, options));
  CHECK(labels_a.str() == labels_b.str());
  CHECK(labels_a.str().rfind("curve_id,label,posterior_1,posterior_2\n", 0) == 0);

  std::ostringstream table;
  BicRow failed;
  failed.error = "cluster 2 collapsed";
  write_bic_table_csv(table, {failed});
  CHECK(table.str().find(",false,,,,,cluster 2 collapsed\n") != std::string::npos);
}

TEST_CASE("mean curves for plotting") {
  const BSplineBasis basis = BSplineBasis::uniform(4, 2, 0.0, 2.0);
  Eigen::MatrixXd cx(3, 4), cy(3, 4);
  cx << 1, 2, 3, 4, 2, 2, 2, 2, 0, 0, 0, 0;
  cy << 4, 3, 2, 1, 1, 1, 1, 1, 3, 3, 3, 3;
  StoredResult stored{FunctionalDataset::from_coefficients(cx, cy, {basis}, {basis}), {1, 2, 2}, 2};
  std::ostringstream out;
  write_mean_curves_csv(out, stored, 5);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "role,variable,t,cluster_1,cluster_2");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 10);
  // Cluster 1 has one member: its mean curve is that member's smoothed curve.
  CHECK(rows[0] == "X,X1,0,1,1");
  CHECK(rows[4] == "X,X1,2,4,1");
  CHECK(rows[5] == "Y,Y1,0,4,2");
  CHECK(rows[9] == "Y,Y1,2,1,2");
  CHECK_THROWS_AS(write_mean_curves_csv(out, stored, 1), DomainError);
}
