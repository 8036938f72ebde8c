#pragma once

// Random small models and datasets shared by the test programs.

#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "skewcwm/em.hpp"
#include "skewcwm/funbasis.hpp"
#include "skewcwm/model.hpp"
#include "skewcwm/skewdist.hpp"

namespace fixtures {

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(gen);
  return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, int dim, double ridge = 0.5) {
  const Eigen::MatrixXd a = normal_matrix(gen, dim, dim);
  return a * a.transpose() / dim + ridge * Eigen::MatrixXd::Identity(dim, dim);
}

inline Eigen::MatrixXd random_orthonormal(std::mt19937_64& gen, int rows, int cols) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal_matrix(gen, rows, rows));
  return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

/// Concentration drawn from a range where every family has a finite, well-behaved density.
inline double random_concentration(std::mt19937_64& gen, skewcwm::SkewKind kind) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind) {
    case skewcwm::SkewKind::VarianceGamma: return 3.3 + 4.0 * u(gen);
    case skewcwm::SkewKind::SkewT: return 3.0 + 6.0 * u(gen);
    case skewcwm::SkewKind::NormalInverseGaussian: return 0.5 + 2.5 * u(gen);
  }
  return 1.0;
}

/// Dataset with uniform bases of the given sizes on [0, 1] and random coefficients.
inline skewcwm::FunctionalDataset random_dataset(std::mt19937_64& gen, int n, int rx, int ry, int x_degree = 2,
                                                 int y_degree = 1) {
  using skewcwm::BSplineBasis;
  return skewcwm::FunctionalDataset::from_coefficients(
      normal_matrix(gen, n, rx), normal_matrix(gen, n, ry), {BSplineBasis::uniform(rx, x_degree, 0.0, 1.0)},
      {BSplineBasis::uniform(ry, y_degree, 0.0, 1.0)});
}

inline skewcwm::XClusterParams random_x_cluster(std::mt19937_64& gen, int rx, int d, skewcwm::SkewKind kind) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  skewcwm::XClusterParams x;
  x.mu = normal_matrix(gen, rx, 1, 0.5);
  x.alpha = normal_matrix(gen, rx, 1, 0.3);
  x.orientation = random_orthonormal(gen, rx, d);
  x.b = 0.5 + 0.5 * u(gen);
  x.a.resize(d);
  double level = x.b;
  for (int j = d - 1; j >= 0; --j) level += 0.3 + u(gen), x.a(j) = level;
  x.family = skewcwm::SkewFamily{kind, random_concentration(gen, kind)};
  return x;
}

inline skewcwm::YClusterParams random_y_cluster(std::mt19937_64& gen, int rx, int ry, skewcwm::SkewKind kind) {
  skewcwm::YClusterParams y;
  y.regression = normal_matrix(gen, ry, rx + 1, 0.5);
  y.alpha = normal_matrix(gen, ry, 1, 0.3);
  y.sigma = random_spd(gen, ry);
  y.family = skewcwm::SkewFamily{kind, random_concentration(gen, kind)};
  return y;
}

inline skewcwm::ClusterModel random_model(std::mt19937_64& gen, int k, int rx, int ry, int d, skewcwm::SkewKind x_kind,
                                          skewcwm::SkewKind y_kind) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  skewcwm::ClusterModel model;
  model.pi.resize(k);
  for (int c = 0; c < k; ++c) model.pi(c) = u(gen);
  model.pi /= model.pi.sum();
  for (int c = 0; c < k; ++c) {
    model.x.push_back(random_x_cluster(gen, rx, d, x_kind));
    model.y.push_back(random_y_cluster(gen, rx, ry, y_kind));
  }
  return model;
}

inline constexpr skewcwm::SkewKind kAllKinds[] = {skewcwm::SkewKind::VarianceGamma, skewcwm::SkewKind::SkewT,
                                                  skewcwm::SkewKind::NormalInverseGaussian};

/// Per-cluster log of pi_k f_X g_Y evaluated directly from the coefficient-space densities.
inline Eigen::MatrixXd direct_log_joint(const skewcwm::FunctionalDataset& data, const skewcwm::ClusterModel& model) {
  const int n = data.size();
  const int k = model.n_clusters();
  Eigen::MatrixXd out(n, k);
  for (int c = 0; c < k; ++c) {
    const auto& x = model.x[c];
    const auto& y = model.y[c];
    const skewcwm::SkewParams x_law{x.mu, x.alpha, skewcwm::x_scale_matrix(x, data.gram_x_sqrt), x.family};
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd cx = data.cx.row(i).transpose();
      Eigen::VectorXd design(data.rx() + 1);
      design << data.gram_x * cx, 1.0;
      const skewcwm::SkewParams y_law{y.regression * design, y.alpha, y.sigma, y.family};
      out(i, c) = std::log(model.pi[c]) + skewcwm::skew_log_density(cx, x_law) +
                  skewcwm::skew_log_density(data.cy.row(i).transpose(), y_law);
    }
  }
  return out;
}

}  // namespace fixtures
