#include <string>

#include "skewcwm/errors.hpp"
#include "skewcwm/sim.hpp"

namespace skewcwm {
namespace {

using Matrix6 = Eigen::Matrix<double, 6, 6, Eigen::RowMajor>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

// Published covariate scale matrices. The printed values differ from exact
// symmetry in the last digits, so they are symmetrized before use.
Eigen::MatrixXd covariate_scale(int cluster) {
  Matrix6 m;
  if (cluster == 0) {
    m << 35293.603, -34652.17, 33635.415, -21127.07, 16185.294, 6203.499,
        -34652.172, 53300.21, -50164.778, 39232.83, -23938.415, 11415.853,
        33635.415, -50164.78, 57345.569, -45236.01, 32712.598, -5203.224,
        -21127.071, 39232.83, -45236.014, 42343.90, -30233.209, 16558.252,
        16185.294, -23938.42, 32712.598, -30233.21, 28223.659, -7432.215,
        6203.499, 11415.85, -5203.224, 16558.25, -7432.215, 37585.733;
  } else {
    m << 32496.743, -33954.84, 30255.33, -19930.28, 14794.720, 2833.563,
        -33954.843, 53968.88, -50455.29, 40307.52, -23295.369, 14702.169,
        30255.329, -50455.29, 54784.92, -45636.53, 30633.456, -12566.028,
        -19930.283, 40307.52, -45636.53, 44069.51, -29155.230, 21986.692,
        14794.720, -23295.37, 30633.46, -29155.23, 27636.508, -8247.361,
        2833.563, 14702.17, -12566.03, 21986.69, -8247.361, 40627.008;
  }
  const Eigen::MatrixXd dense = m;
  return 0.5 * (dense + dense.transpose());
}

Eigen::MatrixXd slope(int cluster) {
  Matrix6 m;
  if (cluster == 0) {
    m << -0.2425716, 0.54897465, -0.8916372, 1.29210175, -2.1477465, 3.3094321,
        -0.1060100, 1.26481276, -1.9308257, 2.36947593, -3.4423522, 4.2985155,
        -1.1520068, 0.93679861, -2.2869660, 3.93104866, -5.8769335, 7.0047824,
        4.3109023, 0.09308357, -1.7355627, 0.16265468, 0.3923705, 0.4745340,
        0.6957114, 0.80979318, -1.6477535, 1.49785833, -1.3492138, 1.6052517,
        3.3165545, -1.96173600, 0.4144113, -0.05521575, -0.1246685, 0.4763175;
  } else {
    m << -0.18286204, 0.4846445, -0.8103231, 1.1106091, -1.8322473, 3.0437840,
        -0.09704194, 0.9753574, -1.5860429, 1.9259053, -2.8032265, 3.8551773,
        -1.21799403, 0.8923668, -1.4619894, 2.5499362, -4.7798136, 6.5881388,
        1.45078879, 2.6988567, -4.0145100, 2.2191593, -0.5766956, 0.8673926,
        -0.29982902, 0.9611298, -0.7879001, 0.4851317, -0.3288526, 0.8183521,
        2.00917573, -1.0346535, 0.5647058, -0.5797621, 0.4183034, 0.1227972;
  }
  return m;
}

Eigen::VectorXd intercept(int cluster) {
  Vector6 v;
  if (cluster == 0) {
    v << 4.978059, -150.127321, 294.147021, -803.866942, 57.684388, 211.959684;
  } else {
    v << 0.1084669, -59.2740539, 302.7418344, -1012.3411351, 111.9925126, 172.9547505;
  }
  return v;
}

// Locations used by the NIG-VG and VG-VG scenarios.
Eigen::VectorXd low_location(int cluster) {
  Vector6 v;
  if (cluster == 0) {
    v << 763.1701, 679.3222, 465.8823, 544.5796, 640.5101, 642.5667;
  } else {
    v << 778.8822, 750.8995, 402.3499, 836.9349, 840.3188, 831.0520;
  }
  return v;
}

// Locations used by the NIG-NIG and ST-ST scenarios.
Eigen::VectorXd high_location(int cluster) {
  Vector6 v;
  if (cluster == 0) {
    v << 1526.340, 1358.644, 931.7646, 1089.159, 1281.020, 1285.133;
  } else {
    v << 1557.764, 1501.799, 804.6998, 1673.870, 1680.638, 1662.104;
  }
  return v;
}

Eigen::MatrixXd correlated_response_scale() {
  Matrix6 m;
  m << 28.35493, 28.62064, 118.3307, 95.89802, 42.41898, 36.26409,
      28.62064, 226.48897, 150.7904, 371.04226, 186.19665, 134.65827,
      118.33066, 150.79045, 1241.6319, 549.88239, 412.62674, 259.10875,
      95.89802, 371.04226, 549.8824, 2616.75870, 836.74973, 835.79828,
      42.41898, 186.19665, 412.6267, 836.74973, 749.32405, 404.91274,
      36.26409, 134.65827, 259.1088, 835.79828, 404.91274, 412.15975;
  const Eigen::MatrixXd dense = m;
  return 0.5 * (dense + dense.transpose());
}

Eigen::VectorXd constant(double value) { return Eigen::VectorXd::Constant(6, value); }

Eigen::VectorXd vec6(double a, double b, double c, double d, double e, double f) {
  Vector6 v;
  v << a, b, c, d, e, f;
  return v;
}

struct SideSpec {
  SkewFamily family;
  Eigen::VectorXd alpha[2];
};

Scenario assemble(std::string name, const SideSpec& x_side, const SideSpec& y_side,
                  Eigen::VectorXd (*location)(int), const Eigen::MatrixXd& response_scale) {
  Scenario s;
  s.name = std::move(name);
  s.pi = Eigen::VectorXd::Constant(2, 0.5);
  for (int k = 0; k < 2; ++k) {
    ScenarioCluster c;
    c.x = SkewParams{location(k), x_side.alpha[k], covariate_scale(k), x_side.family};
    c.slope = slope(k);
    c.intercept = intercept(k);
    c.residual = SkewParams{Eigen::VectorXd::Zero(6), y_side.alpha[k], response_scale, y_side.family};
    s.clusters.push_back(std::move(c));
  }
  s.validate();
  return s;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"NIG-VG", "NIG-NIG", "ST-ST", "VG-VG"}; }

Scenario builtin_scenario(std::string_view name) {
  const Eigen::MatrixXd spherical = 879.1197 * Eigen::MatrixXd::Identity(6, 6);
  if (name == "NIG-VG") {
    return assemble("NIG-VG", {SkewFamily::normal_inverse_gaussian(3.0), {constant(0.1), constant(0.1)}},
                    {SkewFamily::variance_gamma(2.0), {constant(-0.5), constant(-0.5)}}, low_location, spherical);
  }
  if (name == "NIG-NIG") {
    return assemble("NIG-NIG", {SkewFamily::normal_inverse_gaussian(1.0), {constant(100.0), constant(100.0)}},
                    {SkewFamily::normal_inverse_gaussian(1.5), {constant(100.0), constant(100.0)}}, high_location,
                    spherical);
  }
  if (name == "ST-ST") {
    return assemble("ST-ST", {SkewFamily::skew_t(4.0), {constant(0.5), constant(0.5)}},
                    {SkewFamily::skew_t(6.0), {constant(-0.5), constant(-0.5)}}, high_location, spherical);
  }
  if (name == "VG-VG") {
    return assemble("VG-VG",
                    {SkewFamily::variance_gamma(3.0),
                     {vec6(0.5, -0.10, 0.25, -0.2, -0.5, 1.0), vec6(-0.5, 2.50, 1.3, -1.50, 0.5, 1.0)}},
                    {SkewFamily::variance_gamma(2.0),
                     {vec6(-0.5, 1.00, -1.50, 0.20, 0.5, -1.5), vec6(0.5, -1.50, -0.1, 0.3, 0.1, -0.6)}},
                    low_location, correlated_response_scale());
  }
  throw InputError("unknown scenario '" + std::string(name) + "' (expected NIG-VG, NIG-NIG, ST-ST or VG-VG)");
}

}  // namespace skewcwm
