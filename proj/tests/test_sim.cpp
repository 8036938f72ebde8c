#include <cmath>

#include <doctest.h>

#include "skewcwm/errors.hpp"
#include "skewcwm/sim.hpp"

using namespace skewcwm;

TEST_CASE("built-in scenario constants") {
  CHECK(builtin_scenario_names() == std::vector<std::string>{"NIG-VG", "NIG-NIG", "ST-ST", "VG-VG"});
  for (const auto& name : builtin_scenario_names()) {
    const Scenario s = builtin_scenario(name);
    CHECK_NOTHROW(s.validate());
    CHECK(s.n == 600);
    CHECK(s.n_clusters() == 2);
    CHECK(s.pi(0) == 0.5);
    CHECK(s.pi(1) == 0.5);
    for (const auto& c : s.clusters) {
      CHECK((c.x.sigma - c.x.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(c.x.dim() == 6);
    }
  }

  const Scenario nig_vg = builtin_scenario("NIG-VG");
  for (const auto& c : nig_vg.clusters) {
    CHECK((c.residual.sigma - 879.1197 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.x.family == SkewFamily::normal_inverse_gaussian(3.0));
    CHECK(c.residual.family == SkewFamily::variance_gamma(2.0));
  }
  CHECK((nig_vg.clusters[0].x.alpha.array() == 0.1).all());
  CHECK((nig_vg.clusters[0].residual.alpha.array() == -0.5).all());

  const Scenario vg_vg = builtin_scenario("VG-VG");
  const Eigen::VectorXd alpha_x1{{0.5, -0.10, 0.25, -0.2, -0.5, 1.0}};
  CHECK(vg_vg.clusters[0].x.alpha == alpha_x1);
  CHECK(vg_vg.clusters[0].x.family == SkewFamily::variance_gamma(3.0));
  CHECK(vg_vg.clusters[0].residual.family == SkewFamily::variance_gamma(2.0));
  CHECK(vg_vg.clusters[1].x.mu == nig_vg.clusters[1].x.mu);
  CHECK(vg_vg.clusters[0].residual.alpha.size() == 6);
  CHECK(vg_vg.clusters[0].residual.sigma.isApprox(vg_vg.clusters[0].residual.sigma.transpose(), 0.0));
  CHECK(!vg_vg.clusters[0].residual.sigma.isDiagonal());

  const Scenario nig_nig = builtin_scenario("NIG-NIG");
  const Eigen::VectorXd mu_x1{{1526.340, 1358.644, 931.7646, 1089.159, 1281.020, 1285.133}};
  CHECK(nig_nig.clusters[0].x.mu == mu_x1);
  CHECK(nig_nig.clusters[0].x.family == SkewFamily::normal_inverse_gaussian(1.0));
  CHECK(nig_nig.clusters[0].residual.family == SkewFamily::normal_inverse_gaussian(1.5));
  CHECK((nig_nig.clusters[1].x.alpha.array() == 100.0).all());
  CHECK((nig_nig.clusters[1].residual.alpha.array() == 100.0).all());

  const Scenario st_st = builtin_scenario("ST-ST");
  CHECK(st_st.clusters[0].x.family == SkewFamily::skew_t(4.0));
  CHECK(st_st.clusters[0].residual.family == SkewFamily::skew_t(6.0));
  CHECK(st_st.clusters[0].x.mu == mu_x1);

  CHECK_THROWS_AS(builtin_scenario("GH-GH"), InputError);
}

TEST_CASE("simulated covariate means match the mixture mean") {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario s = builtin_scenario(name);
    const SkewParams& law = s.clusters[0].x;
    const double c = law.family.concentration;
    double mean_w = 1.0;
    switch (law.family.kind) {
      case SkewKind::VarianceGamma: mean_w = 1.0; break;
      case SkewKind::SkewT: mean_w = c / (c - 2.0); break;
      case SkewKind::NormalInverseGaussian: mean_w = 1.0 / c; break;
    }
    const int n = 10000;
    const Eigen::MatrixXd draws = sample_skew(law, n, 2024);
    const Eigen::VectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
    const Eigen::VectorXd se = (centered.colwise().squaredNorm() / (n - 1.0)).cwiseSqrt() / std::sqrt(double(n));
    const Eigen::VectorXd expected = law.mu + mean_w * law.alpha;
    INFO("scenario " << name);
    for (int r = 0; r < 6; ++r) CHECK(std::abs(mean(r) - expected(r)) <= 4.0 * se(r));
  }
}

TEST_CASE("simulation output") {
  const Scenario s = builtin_scenario("NIG-NIG");
  const SimulatedData a = simulate(s, 42);
  const SimulatedData b = simulate(s, 42);
  CHECK(a.cx == b.cx);
  CHECK(a.cy == b.cy);
  CHECK(a.labels == b.labels);
  CHECK(a.data.cx == b.data.cx);
  CHECK(simulate(s, 43).cx != a.cx);

  REQUIRE(a.curves.size() == 600);
  CHECK(a.curves.x_names.size() == 1);
  CHECK(a.curves.y_names.size() == 1);
  CHECK(a.curves.x[0][0].t.size() == 101);
  CHECK(a.curves.x[0][0].t.front() == 0.0);
  CHECK(a.curves.x[0][0].t.back() == 1.0);

  // Smoothing the rendered curves recovers the generating coefficients.
  CHECK((a.data.cx - a.cx).cwiseAbs().maxCoeff() < 1e-8 * a.cx.cwiseAbs().maxCoeff());
  CHECK((a.data.cy - a.cy).cwiseAbs().maxCoeff() < 1e-8 * a.cy.cwiseAbs().maxCoeff());

  // Labels are Binomial(600, 1/2): two-sided exact test at level 1e-4 accepts 253..347.
  const auto ones = std::count(a.labels.begin(), a.labels.end(), 1);
  CHECK(ones + std::count(a.labels.begin(), a.labels.end(), 2) == 600);
  CHECK(std::abs(ones - 300) <= 47);
}

TEST_CASE("custom scenarios are validated") {
  Scenario s = builtin_scenario("ST-ST");
  s.pi = Eigen::Vector2d(0.7, 0.2);
  CHECK_THROWS_AS(s.validate(), ModelError);
  s = builtin_scenario("ST-ST");
  s.clusters[0].residual.mu(0) = 1.0;
  CHECK_THROWS_AS(s.validate(), ModelError);
  s = builtin_scenario("ST-ST");
  s.grid_points = 4;
  CHECK_THROWS_AS(s.validate(), ModelError);
}

TEST_CASE("label matching") {
  CHECK(match_labels({2, 2, 1, 1}, {1, 1, 2, 2}, 2, 2) == std::vector<int>{2, 1});
  CHECK(match_labels({1, 1, 2, 2}, {1, 1, 2, 2}, 2, 2) == std::vector<int>{1, 2});
  CHECK(match_labels({3, 3, 1, 2, 2}, {1, 1, 2, 3, 3}, 3, 3) == std::vector<int>{2, 3, 1});
  CHECK_THROWS_AS(match_labels({1, 2}, {1}, 2, 2), DomainError);
  CHECK_THROWS_AS(match_labels({1, 3}, {1, 2}, 2, 2), DomainError);
}

TEST_CASE("benchmark bookkeeping") {
  Scenario s = builtin_scenario("NIG-NIG");
  s.n = 120;
  BenchmarkOptions options;
  options.reps = 1;
  options.seed = 5;
  options.grid = true_model_grid(s);
  options.grid.fixed_dim = 2;
  options.em.max_iter = 20;
  const BenchmarkSummary summary = benchmark(s, options);
  REQUIRE(summary.replicates.size() == 1);
  const ReplicateOutcome& r = summary.replicates[0];
  REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(r.seed == 5);
  CHECK(summary.sd == 0.0);
  CHECK(summary.mean == r.ari);
  CHECK(summary.median == r.ari);
  CHECK(r.ari <= 1.0);
  REQUIRE(summary.slope_mse.size() == 2);
  for (const auto& m : summary.slope_mse) {
    CHECK(m.rows() == 6);
    CHECK((m.array() >= 0.0).all());
  }
  CHECK(true_model_grid(s).families.front() ==
        std::pair{SkewKind::NormalInverseGaussian, SkewKind::NormalInverseGaussian});
  options.reps = 0;
  CHECK_THROWS_AS(benchmark(s, options), DomainError);
}
