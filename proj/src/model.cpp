#include "skewcwm/model.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Cholesky>

#include "skewcwm/errors.hpp"

namespace skewcwm {
namespace {

constexpr std::array<std::pair<FlmVariant, std::string_view>, 6> kVariantNames{{
    {FlmVariant::AkjBkQkDk, "AkjBkQkDk"},
    {FlmVariant::AkjBQkDk, "AkjBQkDk"},
    {FlmVariant::AkBkQkDk, "AkBkQkDk"},
    {FlmVariant::AkBQkDk, "AkBQkDk"},
    {FlmVariant::ABkQkDk, "ABkQkDk"},
    {FlmVariant::ABQkDk, "ABQkDk"},
}};

constexpr std::array<std::pair<SigmaFamily, std::string_view>, 8> kSigmaNames{{
    {SigmaFamily::EII, "EII"},
    {SigmaFamily::VII, "VII"},
    {SigmaFamily::EEI, "EEI"},
    {SigmaFamily::VEI, "VEI"},
    {SigmaFamily::EVI, "EVI"},
    {SigmaFamily::VVI, "VVI"},
    {SigmaFamily::EEE, "EEE"},
    {SigmaFamily::VVV, "VVV"},
}};

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

// Geometric mean of the diagonal, i.e. |diag(m)|^(1/p).
double diagonal_geometric_mean(const Eigen::MatrixXd& m) {
  return std::exp(m.diagonal().array().log().mean());
}

}  // namespace

std::string_view variant_name(FlmVariant v) {
  for (const auto& [value, name] : kVariantNames) {
    if (value == v) return name;
  }
  return "?";
}

FlmVariant parse_flm_variant(std::string_view name) {
  for (const auto& [value, known] : kVariantNames) {
    if (known == name) return value;
  }
  throw InputError("unknown subspace model '" + std::string(name) + "'");
}

std::string_view sigma_family_name(SigmaFamily f) {
  for (const auto& [value, name] : kSigmaNames) {
    if (value == f) return name;
  }
  return "?";
}

SigmaFamily parse_sigma_family(std::string_view name) {
  for (const auto& [value, known] : kSigmaNames) {
    if (known == name) return value;
  }
  throw InputError("unknown response covariance family '" + std::string(name) + "'");
}

void XClusterParams::validate(int rx) const {
  if (mu.size() != rx || alpha.size() != rx) throw ModelError("X cluster: location/skewness length mismatch");
  const int dim = d();
  if (dim < 1 || dim >= rx) throw ModelError("X cluster: intrinsic dimension must lie in [1, R_X - 1]");
  if (orientation.rows() != rx || orientation.cols() != dim) throw ModelError("X cluster: orientation shape mismatch");
  if (!mu.allFinite() || !alpha.allFinite() || !orientation.allFinite() || !a.allFinite() || !std::isfinite(b)) {
    throw ModelError("X cluster: non-finite parameters");
  }
  for (int j = 0; j < dim; ++j) {
    if (!(a[j] > 0.0)) throw ModelError("X cluster: subspace variances must be positive");
    if (j > 0 && a[j] > a[j - 1] * (1.0 + 1e-12)) throw ModelError("X cluster: subspace variances must be descending");
  }
  if (!(b > 0.0)) throw ModelError("X cluster: noise variance must be positive");
  const Eigen::MatrixXd gram = orientation.transpose() * orientation;
  if ((gram - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-8) {
    throw ModelError("X cluster: orientation columns are not orthonormal");
  }
  family.validate();
}

void YClusterParams::validate(int rx, int ry) const {
  if (regression.rows() != ry || regression.cols() != rx + 1) throw ModelError("Y cluster: regression shape mismatch");
  if (alpha.size() != ry) throw ModelError("Y cluster: skewness length mismatch");
  if (sigma.rows() != ry || sigma.cols() != ry) throw ModelError("Y cluster: scale shape mismatch");
  if (!regression.allFinite() || !alpha.allFinite() || !sigma.allFinite()) {
    throw ModelError("Y cluster: non-finite parameters");
  }
  if (!is_symmetric(sigma)) throw ModelError("Y cluster: scale matrix is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(sigma).info() != Eigen::Success) {
    throw ModelError("Y cluster: scale matrix is not positive definite");
  }
  family.validate();
}

std::vector<int> ClusterModel::dims() const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& c : x) out.push_back(c.d());
  return out;
}

void ClusterModel::validate() const {
  const int k = n_clusters();
  if (k < 1) throw ModelError("model needs at least one cluster");
  if (static_cast<int>(x.size()) != k || static_cast<int>(y.size()) != k) {
    throw ModelError("model: cluster parameter lists do not match the mixing weights");
  }
  if ((pi.array() <= 0.0).any() || std::abs(pi.sum() - 1.0) > 1e-10) {
    throw ModelError("model: mixing weights must be positive and sum to one");
  }
  const int r_x = rx();
  const int r_y = ry();
  for (int c = 0; c < k; ++c) {
    x[c].validate(r_x);
    y[c].validate(r_x, r_y);
  }
}

int count_free_params(const ModelShape& shape) {
  const int k = shape.n_clusters;
  const int rx = shape.rx;
  const int p = shape.ry;
  if (k < 1 || rx < 2 || p < 1 || static_cast<int>(shape.dims.size()) != k) {
    throw ModelError("count_free_params: inconsistent model shape");
  }
  const int sum_d = std::accumulate(shape.dims.begin(), shape.dims.end(), 0);
  int orientation = 0;
  for (int d : shape.dims) orientation += d * rx - d * (d + 1) / 2;

  int a_count = 0;
  int b_count = 0;
  switch (shape.parsimony.flm) {
    case FlmVariant::AkjBkQkDk: a_count = sum_d, b_count = k; break;
    case FlmVariant::AkjBQkDk: a_count = sum_d, b_count = 1; break;
    case FlmVariant::AkBkQkDk: a_count = k, b_count = k; break;
    case FlmVariant::AkBQkDk: a_count = k, b_count = 1; break;
    case FlmVariant::ABkQkDk: a_count = 1, b_count = k; break;
    case FlmVariant::ABQkDk: a_count = 1, b_count = 1; break;
  }

  int sigma_count = 0;
  switch (shape.parsimony.sigma_y) {
    case SigmaFamily::EII: sigma_count = 1; break;
    case SigmaFamily::VII: sigma_count = k; break;
    case SigmaFamily::EEI: sigma_count = p; break;
    case SigmaFamily::VEI: sigma_count = k + p - 1; break;
    case SigmaFamily::EVI: sigma_count = 1 + k * (p - 1); break;
    case SigmaFamily::VVI: sigma_count = k * p; break;
    case SigmaFamily::EEE: sigma_count = p * (p + 1) / 2; break;
    case SigmaFamily::VVV: sigma_count = k * p * (p + 1) / 2; break;
  }

  const int conc = (shape.parsimony.common_concentration_x ? 1 : k) +
                   (shape.parsimony.common_concentration_y ? 1 : k);
  return (k - 1) + 2 * k * rx + orientation + a_count + b_count + k * p * (rx + 1) + k * p + sigma_count + conc;
}

int count_free_params(const ClusterModel& model) {
  return count_free_params(ModelShape{model.n_clusters(), model.rx(), model.ry(), model.dims(), model.parsimony});
}

std::vector<Eigen::MatrixXd> sigma_y_project(std::span<const Eigen::MatrixXd> scatter,
                                             std::span<const double> sizes, SigmaFamily family) {
  const std::size_t k = scatter.size();
  if (k == 0 || sizes.size() != k) throw ModelError("sigma_y_project: one size per scatter matrix is required");
  const Eigen::Index p = scatter.front().rows();
  const double n = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (!(n > 0.0)) throw ModelError("sigma_y_project: total size must be positive");
  for (std::size_t c = 0; c < k; ++c) {
    if (scatter[c].rows() != p || scatter[c].cols() != p) throw ModelError("sigma_y_project: shape mismatch");
    if (!(sizes[c] > 0.0)) throw ModelError("sigma_y_project: cluster sizes must be positive");
  }
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (const auto& w : scatter) pooled += w;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  const double dp = static_cast<double>(p);

  std::vector<Eigen::MatrixXd> out(k);
  switch (family) {
    case SigmaFamily::VVV:
      for (std::size_t c = 0; c < k; ++c) out[c] = scatter[c] / sizes[c];
      break;
    case SigmaFamily::EEE:
      for (auto& m : out) m = pooled / n;
      break;
    case SigmaFamily::EII:
      for (auto& m : out) m = (pooled.trace() / (n * dp)) * identity;
      break;
    case SigmaFamily::VII:
      for (std::size_t c = 0; c < k; ++c) out[c] = (scatter[c].trace() / (sizes[c] * dp)) * identity;
      break;
    case SigmaFamily::EEI: {
      const Eigen::MatrixXd diag = (pooled.diagonal() / n).asDiagonal();
      for (auto& m : out) m = diag;
      break;
    }
    case SigmaFamily::VVI:
      for (std::size_t c = 0; c < k; ++c) out[c] = (scatter[c].diagonal() / sizes[c]).asDiagonal();
      break;
    case SigmaFamily::EVI: {
      double volume = 0.0;
      for (std::size_t c = 0; c < k; ++c) volume += diagonal_geometric_mean(scatter[c]);
      volume /= n;
      for (std::size_t c = 0; c < k; ++c) {
        const double g = diagonal_geometric_mean(scatter[c]);
        out[c] = (volume / g * scatter[c].diagonal()).asDiagonal();
      }
      break;
    }
    case SigmaFamily::VEI: {
      // Alternating maximization of volumes and the shared unit-determinant shape.
      std::vector<double> volume(k);
      for (std::size_t c = 0; c < k; ++c) volume[c] = scatter[c].trace() / (sizes[c] * dp);
      Eigen::VectorXd shape = Eigen::VectorXd::Ones(p);
      for (int iter = 0; iter < 500; ++iter) {
        Eigen::VectorXd weighted = Eigen::VectorXd::Zero(p);
        for (std::size_t c = 0; c < k; ++c) weighted += scatter[c].diagonal() / volume[c];
        shape = weighted / std::exp(weighted.array().log().mean());
        double change = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          const double updated = (scatter[c].diagonal().array() / shape.array()).sum() / (sizes[c] * dp);
          change = std::max(change, std::abs(updated - volume[c]) / volume[c]);
          volume[c] = updated;
        }
        if (change < 1e-12) break;
      }
      for (std::size_t c = 0; c < k; ++c) out[c] = (volume[c] * shape).asDiagonal();
      break;
    }
  }
  for (auto& m : out) m = 0.5 * (m + m.transpose());
  return out;
}

}  // namespace skewcwm
