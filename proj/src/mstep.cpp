#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "em_internal.hpp"
#include "skewcwm/em.hpp"
#include "skewcwm/errors.hpp"
#include "skewcwm/special.hpp"

namespace skewcwm {
namespace {

constexpr double kConcentrationLower = 1e-6;
constexpr double kConcentrationUpper = 1e6;

// Relative size below which the location/skewness system is treated as singular.
constexpr double kDegenerateWeights = 1e-12;

// Smallest admissible variance relative to the average whitened variance.
constexpr double kVarianceFloor = 1e-12;

struct XCluster {
  Eigen::VectorXd mu;
  Eigen::VectorXd alpha;
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors;
  double trace = 0.0;
  int d = 1;
};

void add_warning(std::vector<std::string>* warnings, std::string message) {
  if (warnings != nullptr) warnings->push_back(std::move(message));
}

// Maximizes sum_i t_i [-wi_i |r_i|^2 / 2 + r_i . alpha - w_i |alpha|^2 / 2] over coefficients B and
// skewness alpha, with r_i = y_i - B d_i. The criterion equals
//   sum_i t_i |sqrt(wi_i) r_i - alpha / sqrt(wi_i)|^2 + (sum_i t_i (w_i - 1/wi_i)) |alpha|^2
// up to sign and scale, so it is solved as an ordinary least-squares problem by QR. Forming the normal
// equations instead loses all precision once the latent weights span many orders of magnitude.
struct LocationSkew {
  Eigen::MatrixXd coefficients;  // p x q
  Eigen::VectorXd alpha;         // p, zero when `skewed` is false
  bool rank_deficient = false;
};

LocationSkew fit_location_skew(const Eigen::MatrixXd& target, const Eigen::MatrixXd& design, const Eigen::VectorXd& t,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& wi, bool skewed) {
  const Eigen::Index n = target.rows();
  const Eigen::Index q = design.cols();
  const Eigen::Index cols = skewed ? q + 1 : q;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(skewed ? n + 1 : n, cols);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(lhs.rows(), target.cols());
  double spread = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double root = std::sqrt(t(i) * wi(i));
    lhs.row(i).head(q) = root * design.row(i);
    rhs.row(i) = root * target.row(i);
    if (skewed) {
      lhs(i, q) = std::sqrt(t(i) / wi(i));
      spread += t(i) * std::max(0.0, w(i) - 1.0 / wi(i));
    }
  }
  if (skewed) lhs(n, q) = std::sqrt(spread);

  LocationSkew out;
  Eigen::MatrixXd solution;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  if (qr.rank() == cols) {
    solution = qr.solve(rhs);
  } else {
    out.rank_deficient = true;
    solution = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(lhs).solve(rhs);
  }
  out.coefficients = solution.topRows(q).transpose();
  out.alpha = skewed ? Eigen::VectorXd(solution.row(q).transpose()) : Eigen::VectorXd::Zero(target.cols());
  return out;
}

// sum_i t_i [wi_i r_i r_i' - r_i alpha' - alpha r_i' + w_i alpha alpha'] as a sum of PSD terms.
Eigen::MatrixXd skew_scatter(const Eigen::MatrixXd& residual, const Eigen::VectorXd& alpha, const Eigen::VectorXd& t,
                             const Eigen::VectorXd& w, const Eigen::VectorXd& wi) {
  Eigen::MatrixXd scaled(residual.rows(), residual.cols());
  double spread = 0.0;
  for (Eigen::Index i = 0; i < residual.rows(); ++i) {
    scaled.row(i) = std::sqrt(t(i) * wi(i)) * (residual.row(i) - alpha.transpose() / wi(i));
    spread += t(i) * std::max(0.0, w(i) - 1.0 / wi(i));
  }
  Eigen::MatrixXd out = scaled.transpose() * scaled + spread * alpha * alpha.transpose();
  return 0.5 * (out + out.transpose());
}

bool is_skewed(const Eigen::VectorXd& t, const Eigen::VectorXd& w, const Eigen::VectorXd& wi, double nk) {
  return t.dot(w) * t.dot(wi) - nk * nk > kDegenerateWeights * nk * nk;
}

XCluster estimate_x_cluster(const FunctionalDataset& data, const detail::PreparedData& prepared,
                            const Eigen::VectorXd& t, const Eigen::VectorXd& w, const Eigen::VectorXd& wi, double nk) {
  XCluster out;
  if (is_skewed(t, w, wi, nk)) {
    const LocationSkew fit = fit_location_skew(data.cx, Eigen::MatrixXd::Ones(data.size(), 1), t, w, wi, true);
    out.mu = fit.coefficients.col(0);
    out.alpha = fit.alpha;
  } else {
    out.mu = data.cx.transpose() * t / nk;
    out.alpha = Eigen::VectorXd::Zero(data.rx());
  }

  const Eigen::VectorXd mu_white = data.gram_x_sqrt * out.mu;
  const Eigen::VectorXd alpha_white = data.gram_x_sqrt * out.alpha;
  const Eigen::MatrixXd centered = prepared.white_x.rowwise() - mu_white.transpose();
  const Eigen::MatrixXd scatter = skew_scatter(centered, alpha_white, t, w, wi) / nk;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of a cluster scatter matrix failed");
  out.eigenvalues = eig.eigenvalues().reverse();
  out.eigenvectors = eig.eigenvectors().rowwise().reverse();
  out.trace = scatter.trace();
  return out;
}

// Subspace and noise variances under the requested sharing pattern.
void assign_variances(std::vector<XCluster>& clusters, const std::vector<double>& sizes, FlmVariant variant, int rx,
                      std::vector<Eigen::VectorXd>& a_out, std::vector<double>& b_out) {
  const std::size_t k = clusters.size();
  a_out.assign(k, Eigen::VectorXd());
  b_out.assign(k, 0.0);
  const bool shared_a = variant == FlmVariant::ABkQkDk || variant == FlmVariant::ABQkDk;
  const bool per_cluster_a = variant == FlmVariant::AkBkQkDk || variant == FlmVariant::AkBQkDk;
  const bool shared_b = variant == FlmVariant::AkjBQkDk || variant == FlmVariant::AkBQkDk || variant == FlmVariant::ABQkDk;

  double a_num = 0.0, a_den = 0.0, b_num = 0.0, b_den = 0.0, floor_scale = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const XCluster& x = clusters[c];
    const double head = x.eigenvalues.head(x.d).sum();
    a_num += sizes[c] * head;
    a_den += sizes[c] * x.d;
    b_num += sizes[c] * (x.trace - head);
    b_den += sizes[c] * (rx - x.d);
    floor_scale = std::max(floor_scale, x.trace / rx);
  }
  const double floor = kVarianceFloor * floor_scale;
  for (std::size_t c = 0; c < k; ++c) {
    const XCluster& x = clusters[c];
    Eigen::VectorXd a = x.eigenvalues.head(x.d);
    if (per_cluster_a) a.setConstant(a.mean());
    if (shared_a) a.setConstant(a_num / a_den);
    a_out[c] = a.cwiseMax(floor);
    const double b = shared_b ? b_num / b_den : (x.trace - x.eigenvalues.head(x.d).sum()) / (rx - x.d);
    b_out[c] = std::max(b, floor);
  }
}

struct YCluster {
  Eigen::MatrixXd regression;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd scatter;
};

YCluster estimate_y_cluster(const FunctionalDataset& data, const detail::PreparedData& prepared,
                            const Eigen::VectorXd& t, const Eigen::VectorXd& w, const Eigen::VectorXd& wi, double nk,
                            int cluster, std::vector<std::string>* warnings) {
  const LocationSkew fit = fit_location_skew(data.cy, prepared.design, t, w, wi, is_skewed(t, w, wi, nk));
  if (fit.rank_deficient) {
    add_warning(warnings, "cluster " + std::to_string(cluster + 1) +
                              ": regression system is rank deficient; using the pseudo-inverse");
  }
  YCluster out;
  out.regression = fit.coefficients;
  out.alpha = fit.alpha;
  const Eigen::MatrixXd residual = data.cy - prepared.design * out.regression.transpose();
  out.scatter = skew_scatter(residual, out.alpha, t, w, wi);
  return out;
}

double concentration_statistic(SkewKind kind, const Eigen::VectorXd& t, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& wi, const Eigen::VectorXd& lw) {
  switch (kind) {
    case SkewKind::VarianceGamma: return t.dot(lw) - t.dot(w);
    case SkewKind::SkewT: return t.dot(lw) + t.dot(wi);
    case SkewKind::NormalInverseGaussian: return t.dot(w);
  }
  return 0.0;
}

std::vector<double> estimate_concentrations(SkewKind kind, bool common, const ESuffStats& stats, bool x_side,
                                            const std::vector<double>& sizes, std::vector<std::string>* warnings) {
  const Eigen::MatrixXd& w = x_side ? stats.w_x : stats.w_y;
  const Eigen::MatrixXd& wi = x_side ? stats.wi_x : stats.wi_y;
  const Eigen::MatrixXd& lw = x_side ? stats.lw_x : stats.lw_y;
  const std::size_t k = sizes.size();
  std::vector<double> raw(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    raw[c] = concentration_statistic(kind, stats.t.col(col), w.col(col), wi.col(col), lw.col(col));
  }
  std::vector<double> out(k);
  const auto solve = [&](double statistic, const std::string& who) {
    const ConcentrationSolution sol = solve_concentration(kind, statistic);
    if (sol.clamped) {
      add_warning(warnings, std::string(x_side ? "X" : "Y") + "-side concentration of " + who +
                                " clamped to " + std::to_string(sol.value));
    }
    return sol.value;
  };
  if (common) {
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    const double n = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    std::fill(out.begin(), out.end(), solve(total / n, "all clusters"));
  } else {
    for (std::size_t c = 0; c < k; ++c) out[c] = solve(raw[c] / sizes[c], "cluster " + std::to_string(c + 1));
  }
  return out;
}

ClusterModel m_step_impl(const FunctionalDataset& data, const ESuffStats& stats, const ModelSpec& spec,
                         const ClusterModel* previous, std::vector<std::string>* warnings, double min_cluster_size,
                         bool initial) {
  const int n = data.size();
  const int k = static_cast<int>(stats.t.cols());
  const int rx = data.rx();
  if (rx < 2) throw ModelError("the covariate side needs at least two basis coefficients");
  if (stats.t.rows() != n || k != spec.n_clusters) throw ModelError("responsibilities do not match the data/spec");
  if (previous != nullptr && previous->n_clusters() != k) throw ModelError("previous model has a different K");
  const detail::PreparedData prepared(data);

  std::vector<double> sizes(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    sizes[c] = stats.t.col(c).sum();
    if (!(sizes[c] >= min_cluster_size)) throw EmptyClusterError(c, sizes[c]);
  }

  ClusterModel model;
  model.parsimony = spec.parsimony;
  model.pi.resize(k);
  for (int c = 0; c < k; ++c) model.pi[c] = sizes[c] / n;

  std::vector<XCluster> xs;
  xs.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    XCluster x = estimate_x_cluster(data, prepared, stats.t.col(c), stats.w_x.col(c), stats.wi_x.col(c), sizes[c]);
    if (spec.dims.fixed) {
      x.d = std::clamp(*spec.dims.fixed, 1, rx - 1);
    } else if (previous != nullptr && !spec.dims.reselect_each_iteration) {
      x.d = previous->x[c].d();
    } else {
      x.d = cattell_select(x.eigenvalues, spec.dims.threshold);
    }
    xs.push_back(std::move(x));
  }
  std::vector<Eigen::VectorXd> a;
  std::vector<double> b;
  assign_variances(xs, sizes, spec.parsimony.flm, rx, a, b);

  std::vector<YCluster> ys;
  std::vector<Eigen::MatrixXd> scatter;
  for (int c = 0; c < k; ++c) {
    ys.push_back(estimate_y_cluster(data, prepared, stats.t.col(c), stats.w_y.col(c), stats.wi_y.col(c), sizes[c], c,
                                    warnings));
    scatter.push_back(ys.back().scatter);
  }
  const std::vector<Eigen::MatrixXd> sigma_y = sigma_y_project(scatter, sizes, spec.parsimony.sigma_y);

  std::vector<double> conc_x(static_cast<std::size_t>(k), 1.0);
  std::vector<double> conc_y(static_cast<std::size_t>(k), 1.0);
  if (!initial) {
    conc_x = estimate_concentrations(spec.x_kind, spec.parsimony.common_concentration_x, stats, true, sizes, warnings);
    conc_y = estimate_concentrations(spec.y_kind, spec.parsimony.common_concentration_y, stats, false, sizes, warnings);
  }

  for (int c = 0; c < k; ++c) {
    XClusterParams x;
    x.mu = xs[c].mu;
    x.alpha = xs[c].alpha;
    x.orientation = xs[c].eigenvectors.leftCols(xs[c].d);
    x.a = a[c];
    x.b = b[c];
    x.family = SkewFamily{spec.x_kind, conc_x[c]};
    model.x.push_back(std::move(x));

    if (Eigen::LLT<Eigen::MatrixXd>(sigma_y[c]).info() != Eigen::Success) {
      throw NumericalError("response scale matrix of cluster " + std::to_string(c + 1) + " is singular");
    }
    YClusterParams y;
    y.regression = ys[c].regression;
    y.alpha = ys[c].alpha;
    y.sigma = sigma_y[c];
    y.family = SkewFamily{spec.y_kind, conc_y[c]};
    model.y.push_back(std::move(y));
  }
  return model;
}

}  // namespace

ClusterModel m_step(const FunctionalDataset& data, const ESuffStats& stats, const ModelSpec& spec,
                    const ClusterModel* previous, std::vector<std::string>* warnings, double min_cluster_size) {
  return m_step_impl(data, stats, spec, previous, warnings, min_cluster_size, false);
}

ClusterModel initial_model(const FunctionalDataset& data, const Eigen::MatrixXd& t, const ModelSpec& spec,
                           const EmOptions& options, std::vector<std::string>* warnings) {
  const Eigen::Index n = t.rows();
  const Eigen::Index k = t.cols();
  ESuffStats stats;
  stats.t = t;
  stats.w_x = stats.wi_x = stats.w_y = stats.wi_y = Eigen::MatrixXd::Ones(n, k);
  stats.lw_x = stats.lw_y = Eigen::MatrixXd::Zero(n, k);
  ClusterModel model = m_step_impl(data, stats, spec, nullptr, warnings, options.min_cluster_size, true);
  for (auto& x : model.x) {
    x.alpha.setConstant(options.initial_skewness);
    x.family.concentration = options.initial_concentration;
  }
  for (auto& y : model.y) {
    y.alpha.setConstant(options.initial_skewness);
    y.family.concentration = options.initial_concentration;
  }
  return model;
}

ConcentrationSolution solve_concentration(SkewKind kind, double statistic) {
  if (!std::isfinite(statistic)) throw DomainError("solve_concentration: non-finite statistic");
  if (kind == SkewKind::NormalInverseGaussian) {
    if (!(statistic > 0.0)) throw DomainError("solve_concentration: mean latent weight must be positive");
    const double kappa = 1.0 / statistic;
    const double clamped = std::clamp(kappa, kConcentrationLower, kConcentrationUpper);
    return {clamped, clamped != kappa};
  }
  // Root of log x - digamma(x) + c = 0, decreasing in x; x is psi or nu / 2.
  const bool skew_t = kind == SkewKind::SkewT;
  const double scale = skew_t ? 2.0 : 1.0;
  const double c = skew_t ? 1.0 - statistic : 1.0 + statistic;
  const auto f = [c](double x) { return std::log(x) - digamma(x) + c; };
  double lo = kConcentrationLower / scale;
  double hi = kConcentrationUpper / scale;
  if (f(hi) >= 0.0) return {kConcentrationUpper, true};
  if (f(lo) <= 0.0) return {kConcentrationLower, true};

  // Newton in log x, falling back to bisection whenever a step leaves the bracket.
  double u_lo = std::log(lo);
  double u_hi = std::log(hi);
  double u = 0.5 * (u_lo + u_hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double x = std::exp(u);
    const double fx = f(x);
    if (fx > 0.0) {
      u_lo = u;
    } else {
      u_hi = u;
    }
    const double slope = 1.0 - x * trigamma(x);
    double next = slope < 0.0 ? u - fx / slope : 0.5 * (u_lo + u_hi);
    if (!(next > u_lo && next < u_hi)) next = 0.5 * (u_lo + u_hi);
    const double step = std::abs(next - u);
    u = next;
    if (step < 1e-12 || u_hi - u_lo < 1e-12) break;
  }
  return {scale * std::exp(u), false};
}

int cattell_select(const Eigen::VectorXd& eigenvalues, double threshold) {
  const Eigen::Index r = eigenvalues.size();
  if (r < 2) throw DomainError("cattell_select: at least two eigenvalues are required");
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("cattell_select: threshold must lie in (0, 1)");
  const Eigen::VectorXd gaps = eigenvalues.head(r - 1) - eigenvalues.tail(r - 1);
  const double largest = gaps.maxCoeff();
  if (!(largest > 0.0)) return 1;
  int d = 1;
  for (Eigen::Index j = 0; j < r - 1; ++j) {
    if (gaps[j] / largest >= threshold) d = static_cast<int>(j) + 1;
  }
  return std::clamp(d, 1, static_cast<int>(r) - 1);
}

}  // namespace skewcwm
