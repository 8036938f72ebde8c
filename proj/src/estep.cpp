#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "em_internal.hpp"
#include "skewcwm/em.hpp"
#include "skewcwm/errors.hpp"
#include "skewcwm/special.hpp"

namespace skewcwm {
namespace detail {
namespace {

// Smallest value of delta + p1 used for the latent moments; only reachable for
// variance-gamma observations sitting exactly on the location.
constexpr double kMomentFloor = 1e-12;

}  // namespace

PreparedData::PreparedData(const FunctionalDataset& data) {
  white_x = data.cx * data.gram_x_sqrt;
  design.resize(data.size(), data.rx() + 1);
  design.leftCols(data.rx()) = data.cx * data.gram_x;
  design.col(data.rx()).setOnes();
  const Eigen::LLT<Eigen::MatrixXd> llt(data.gram_x);
  if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix is not positive definite");
  log_det_gram = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

PreparedCluster::PreparedCluster(const XClusterParams& x, const YClusterParams& y, double pi,
                                 const Eigen::MatrixXd& gram_x_sqrt, double log_det_gram) {
  log_pi = std::log(pi);
  const int rx = static_cast<int>(x.mu.size());
  const int d = x.d();
  mu_white = gram_x_sqrt * x.mu;
  orientation = x.orientation;
  inv_a = x.a.cwiseInverse();
  inv_b = 1.0 / x.b;
  const Eigen::VectorXd alpha_white = gram_x_sqrt * x.alpha;
  alpha_in = orientation.transpose() * alpha_white;
  alpha_out = alpha_white - orientation * alpha_in;
  rho_x = alpha_in.cwiseAbs2().dot(inv_a) + alpha_out.squaredNorm() * inv_b;
  log_det_x = x.a.array().log().sum() + (rx - d) * std::log(x.b) - log_det_gram;
  consts_x = unified_constants(x.family, rx);

  regression = y.regression;
  const Eigen::LLT<Eigen::MatrixXd> llt(y.sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("response scale matrix is not positive definite");
  chol_lower = llt.matrixL();
  alpha_y_solved = chol_lower.triangularView<Eigen::Lower>().solve(y.alpha);
  rho_y = alpha_y_solved.squaredNorm();
  log_det_y = 2.0 * chol_lower.diagonal().array().log().sum();
  consts_y = unified_constants(y.family, static_cast<int>(y.alpha.size()));
}

SideTerms side_terms(const QuadraticForms& q, const UnifiedConstants& c, bool with_moments) {
  const double big_a = q.rho + c.p2;
  const double big_b = q.delta + c.p1;
  const double order = 2.0 * c.p3;
  const double omega = std::sqrt(big_a * big_b);
  SideTerms out;
  if (with_moments && big_b >= kMomentFloor && omega >= std::numeric_limits<double>::min()) {
    // One Bessel recurrence serves the density and the first two moments.
    const auto lk = log_bessel_k_triplet(order, omega);
    const double half_log_ratio = 0.5 * (std::log(big_b) - std::log(big_a));
    out.log_density = q.cross + c.p4 - 0.5 * q.dim * std::log(2.0 * std::numbers::pi) - 0.5 * q.log_det +
                      2.0 * c.p3 * half_log_ratio + lk[1];
    out.w = std::exp(half_log_ratio + lk[2] - lk[1]);
    out.wi = std::exp(-half_log_ratio + lk[0] - lk[1]);
    out.lw = half_log_ratio + dlog_bessel_k_dorder(order, omega);
    return out;
  }
  out.log_density = unified_log_density(q, c);
  if (with_moments) {
    const GigMoments m = latent_moments(big_a, std::max(big_b, kMomentFloor), order);
    out.floored = big_b < kMomentFloor;
    out.w = m.e_w;
    out.wi = m.e_inv_w;
    out.lw = m.e_log_w;
  }
  return out;
}

ObservationTerms evaluate_observation(const PreparedCluster& k, const Eigen::Ref<const Eigen::VectorXd>& white_x,
                                      const Eigen::Ref<const Eigen::VectorXd>& design,
                                      const Eigen::Ref<const Eigen::VectorXd>& c_y, bool with_moments) {
  const Eigen::VectorXd centered = white_x - k.mu_white;
  const Eigen::VectorXd inside = k.orientation.transpose() * centered;
  const Eigen::VectorXd outside = centered - k.orientation * inside;
  const QuadraticForms qx{
      inside.cwiseAbs2().dot(k.inv_a) + outside.squaredNorm() * k.inv_b, k.rho_x,
      inside.cwiseProduct(k.alpha_in).dot(k.inv_a) + outside.dot(k.alpha_out) * k.inv_b, k.log_det_x,
      static_cast<int>(centered.size())};

  Eigen::VectorXd residual = c_y - k.regression * design;
  k.chol_lower.triangularView<Eigen::Lower>().solveInPlace(residual);
  const QuadraticForms qy{residual.squaredNorm(), k.rho_y, residual.dot(k.alpha_y_solved), k.log_det_y,
                          static_cast<int>(residual.size())};

  ObservationTerms out;
  out.x = side_terms(qx, k.consts_x, with_moments);
  out.y = side_terms(qy, k.consts_y, with_moments);
  out.log_joint = k.log_pi + out.x.log_density + out.y.log_density;
  return out;
}

namespace {

std::vector<PreparedCluster> prepare_clusters(const FunctionalDataset& data, const ClusterModel& model,
                                              const PreparedData& prepared) {
  model.validate();
  if (model.rx() != data.rx() || model.ry() != data.ry()) {
    throw ModelError("model dimensions do not match the dataset");
  }
  std::vector<PreparedCluster> clusters;
  clusters.reserve(static_cast<std::size_t>(model.n_clusters()));
  for (int k = 0; k < model.n_clusters(); ++k) {
    clusters.emplace_back(model.x[k], model.y[k], model.pi[k], data.gram_x_sqrt, prepared.log_det_gram);
  }
  return clusters;
}

void check_finite(const ObservationTerms& terms, int i, int k, bool with_moments) {
  bool ok = std::isfinite(terms.log_joint);
  if (with_moments) {
    ok = ok && std::isfinite(terms.x.w) && std::isfinite(terms.x.wi) && std::isfinite(terms.x.lw) &&
         std::isfinite(terms.y.w) && std::isfinite(terms.y.wi) && std::isfinite(terms.y.lw) && terms.x.w > 0.0 &&
         terms.x.wi > 0.0 && terms.y.w > 0.0 && terms.y.wi > 0.0;
  }
  if (!ok) {
    throw NumericalError("non-finite E-step quantity at observation " + std::to_string(i + 1) + ", cluster " +
                         std::to_string(k + 1));
  }
}

// Fills row i of the statistics and returns the log of the mixture density.
double process_observation(int i, const PreparedData& prepared, const FunctionalDataset& data,
                           const std::vector<PreparedCluster>& clusters, ESuffStats* stats, int* floored) {
  const int n_clusters = static_cast<int>(clusters.size());
  const bool with_moments = stats != nullptr && stats->w_x.size() > 0;
  std::vector<double> h(static_cast<std::size_t>(n_clusters));
  const Eigen::VectorXd white = prepared.white_x.row(i).transpose();
  const Eigen::VectorXd design = prepared.design.row(i).transpose();
  const Eigen::VectorXd cy = data.cy.row(i).transpose();
  for (int k = 0; k < n_clusters; ++k) {
    const ObservationTerms terms = evaluate_observation(clusters[k], white, design, cy, with_moments);
    check_finite(terms, i, k, with_moments);
    h[k] = terms.log_joint;
    if (with_moments) {
      stats->w_x(i, k) = terms.x.w;
      stats->wi_x(i, k) = terms.x.wi;
      stats->lw_x(i, k) = terms.x.lw;
      stats->w_y(i, k) = terms.y.w;
      stats->wi_y(i, k) = terms.y.wi;
      stats->lw_y(i, k) = terms.y.lw;
      *floored += (terms.x.floored ? 1 : 0) + (terms.y.floored ? 1 : 0);
    }
  }
  double top = h[0];
  for (int k = 1; k < n_clusters; ++k) top = std::max(top, h[k]);
  double total = 0.0;
  for (int k = 0; k < n_clusters; ++k) total += std::exp(h[k] - top);
  const double log_total = top + std::log(total);
  if (stats != nullptr) {
    for (int k = 0; k < n_clusters; ++k) stats->t(i, k) = std::exp(h[k] - log_total);
  }
  return log_total;
}

ESuffStats allocate(int n, int k) {
  ESuffStats s;
  for (Eigen::MatrixXd* m : {&s.t, &s.w_x, &s.wi_x, &s.lw_x, &s.w_y, &s.wi_y, &s.lw_y}) m->resize(n, k);
  return s;
}

double ordered_sum(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace
}  // namespace detail

ESuffStats e_step(const FunctionalDataset& data, const ClusterModel& model) {
  const detail::PreparedData prepared(data);
  const auto clusters = detail::prepare_clusters(data, model, prepared);
  const int n = data.size();
  ESuffStats stats = detail::allocate(n, model.n_clusters());
  std::vector<double> row_loglik(static_cast<std::size_t>(n));
  std::vector<int> row_floored(static_cast<std::size_t>(n), 0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      row_loglik[static_cast<std::size_t>(i)] =
          detail::process_observation(i, prepared, data, clusters, &stats, &row_floored[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(skewcwm_estep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  stats.loglik = detail::ordered_sum(row_loglik);
  stats.n_floored = std::accumulate(row_floored.begin(), row_floored.end(), 0);
  return stats;
}

ESuffStats e_step_serial(const FunctionalDataset& data, const ClusterModel& model) {
  const detail::PreparedData prepared(data);
  const auto clusters = detail::prepare_clusters(data, model, prepared);
  const int n = data.size();
  ESuffStats stats = detail::allocate(n, model.n_clusters());
  std::vector<double> row_loglik(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    row_loglik[static_cast<std::size_t>(i)] =
        detail::process_observation(i, prepared, data, clusters, &stats, &stats.n_floored);
  }
  stats.loglik = detail::ordered_sum(row_loglik);
  return stats;
}

double log_likelihood(const FunctionalDataset& data, const ClusterModel& model) {
  const detail::PreparedData prepared(data);
  const auto clusters = detail::prepare_clusters(data, model, prepared);
  const int n = data.size();
  std::vector<double> row_loglik(static_cast<std::size_t>(n));
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      row_loglik[static_cast<std::size_t>(i)] = detail::process_observation(i, prepared, data, clusters, nullptr, nullptr);
    } catch (...) {
#pragma omp critical(skewcwm_loglik_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return detail::ordered_sum(row_loglik);
}

double h_k(const Eigen::VectorXd& c_y, const Eigen::VectorXd& c_x, const XClusterParams& x, const YClusterParams& y,
           double pi_k, const Eigen::MatrixXd& gram_x, const Eigen::MatrixXd& gram_x_sqrt) {
  const int rx = static_cast<int>(c_x.size());
  const int ry = static_cast<int>(c_y.size());
  x.validate(rx);
  y.validate(rx, ry);
  if (!(pi_k > 0.0)) throw ModelError("h_k: mixing weight must be positive");
  const Eigen::LLT<Eigen::MatrixXd> llt(gram_x);
  if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix is not positive definite");
  const double log_det_gram = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const detail::PreparedCluster cluster(x, y, pi_k, gram_x_sqrt, log_det_gram);
  Eigen::VectorXd design(rx + 1);
  design.head(rx) = gram_x * c_x;
  design[rx] = 1.0;
  const auto terms = detail::evaluate_observation(cluster, gram_x_sqrt * c_x, design, c_y, false);
  return terms.log_joint + 0.5 * (rx + ry) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_gram;
}

Eigen::MatrixXd x_scale_matrix(const XClusterParams& x, const Eigen::MatrixXd& gram_x_sqrt) {
  const int rx = static_cast<int>(x.mu.size());
  const Eigen::MatrixXd& u = x.orientation;
  const Eigen::MatrixXd white = u * x.a.asDiagonal() * u.transpose() +
                                x.b * (Eigen::MatrixXd::Identity(rx, rx) - u * u.transpose());
  const Eigen::MatrixXd inv_sqrt = gram_x_sqrt.inverse();
  const Eigen::MatrixXd out = inv_sqrt * white * inv_sqrt;
  return 0.5 * (out + out.transpose());
}

}  // namespace skewcwm
