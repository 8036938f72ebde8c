#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "skewcwm/funbasis.hpp"
#include "skewcwm/model.hpp"
#include "skewcwm/skewdist.hpp"

namespace skewcwm::detail {

/// Per-dataset quantities reused by every E- and M-step.
struct PreparedData {
  Eigen::MatrixXd white_x;  // rows G^{1/2} c_X
  Eigen::MatrixXd design;   // rows (G c_X, 1)
  double log_det_gram = 0.0;

  explicit PreparedData(const FunctionalDataset& data);
};

/// Per-cluster quantities that do not depend on the observation.
struct PreparedCluster {
  double log_pi = 0.0;

  // Covariate side, in whitened coordinates.
  Eigen::VectorXd mu_white;
  Eigen::MatrixXd orientation;
  Eigen::VectorXd inv_a;
  double inv_b = 1.0;
  Eigen::VectorXd alpha_in;   // U' G^{1/2} alpha
  Eigen::VectorXd alpha_out;  // remainder of G^{1/2} alpha outside the subspace
  double rho_x = 0.0;
  double log_det_x = 0.0;
  UnifiedConstants consts_x{};

  // Response side.
  Eigen::MatrixXd regression;
  Eigen::MatrixXd chol_lower;
  Eigen::VectorXd alpha_y_solved;  // L^{-1} alpha_Y
  double rho_y = 0.0;
  double log_det_y = 0.0;
  UnifiedConstants consts_y{};

  PreparedCluster(const XClusterParams& x, const YClusterParams& y, double pi, const Eigen::MatrixXd& gram_x_sqrt,
                  double log_det_gram);
};

struct SideTerms {
  double log_density = 0.0;
  double w = 0.0;
  double wi = 0.0;
  double lw = 0.0;
  bool floored = false;  // moments used the distance floor instead of the exact posterior
};

struct ObservationTerms {
  double log_joint = 0.0;  // log pi_k + log f_X + log f_Y
  SideTerms x;
  SideTerms y;
};

ObservationTerms evaluate_observation(const PreparedCluster& cluster, const Eigen::Ref<const Eigen::VectorXd>& white_x,
                                      const Eigen::Ref<const Eigen::VectorXd>& design,
                                      const Eigen::Ref<const Eigen::VectorXd>& c_y, bool with_moments);

/// Log density and, optionally, latent moments from precomputed quadratic forms.
SideTerms side_terms(const QuadraticForms& q, const UnifiedConstants& c, bool with_moments);

}  // namespace skewcwm::detail
