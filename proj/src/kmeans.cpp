#include <limits>
#include <string>

#include "skewcwm/em.hpp"
#include "skewcwm/errors.hpp"
#include "skewcwm/random.hpp"

namespace skewcwm {
namespace {

constexpr int kMaxLloydIterations = 100;

// k-means++ seeding: each new centre is drawn with probability proportional to
// the squared distance to the nearest centre already chosen.
Eigen::MatrixXd seed_centres(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centres(k, points.cols());
  centres.row(0) = points.row(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n))));
  Eigen::VectorXd nearest = (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const Eigen::Index pick = nearest.sum() > 0.0 ? rng.categorical(nearest)
                                                  : static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n)));
    centres.row(c) = points.row(pick);
    nearest = nearest.cwiseMin((points.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }
  return centres;
}

double lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd& centres, std::vector<int>& labels) {
  const Eigen::Index n = points.rows();
  const auto k = static_cast<int>(centres.rows());
  labels.assign(static_cast<std::size_t>(n), -1);
  double inertia = 0.0;
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = (points.row(i) - centres.row(c)).squaredNorm();
        if (dist < best_dist) best_dist = dist, best = c;
      }
      inertia += best_dist;
      if (labels[static_cast<std::size_t>(i)] != best) changed = true;
      labels[static_cast<std::size_t>(i)] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      counts[labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        centres.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Empty cluster: move its centre to the point farthest from its own centre.
      Eigen::Index far = 0;
      double far_dist = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dist = (points.row(i) - centres.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (dist > far_dist) far_dist = dist, far = i;
      }
      centres.row(c) = points.row(far);
      changed = true;
    }
    if (!changed) break;
  }
  return inertia;
}

}  // namespace

std::vector<int> kmeans(const Eigen::MatrixXd& points, int n_clusters, int restarts, std::uint64_t seed) {
  if (n_clusters < 1) throw DomainError("kmeans: need at least one cluster");
  if (n_clusters > points.rows()) throw DomainError("kmeans: more clusters than points");
  Rng rng(seed);
  std::vector<int> best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Eigen::MatrixXd centres = seed_centres(points, n_clusters, rng);
    std::vector<int> labels;
    const double inertia = lloyd(points, centres, labels);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = std::move(labels);
    }
  }
  return best;
}

Eigen::MatrixXd initialize(const FunctionalDataset& data, int n_clusters, InitStrategy strategy, std::uint64_t seed,
                           int kmeans_restarts) {
  const int n = data.size();
  if (n_clusters < 1 || n_clusters > n) {
    throw DomainError("initialize: K must lie in [1, n], got " + std::to_string(n_clusters));
  }
  std::vector<int> labels;
  if (strategy == InitStrategy::KMeans) {
    Eigen::MatrixXd points(n, data.rx() + data.ry());
    points << data.cx, data.cy;
    labels = kmeans(points, n_clusters, kmeans_restarts, seed);
  } else {
    Rng rng(seed);
    labels.resize(static_cast<std::size_t>(n));
    for (int& label : labels) label = static_cast<int>(rng.below(static_cast<std::size_t>(n_clusters)));
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n_clusters);
  for (int i = 0; i < n; ++i) t(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  return t;
}

}  // namespace skewcwm
