#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "rigfield/rig.hpp"

namespace rigfield {

/// Coupling between two discrete measures; rows follow `a`, columns `b`.
struct TransportPlan {
  Eigen::MatrixXd plan;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  int iterations = 0;
  double marginal_error = 0.0;  // L1 violation of the row marginals
  bool converged = false;

  Eigen::Index rows() const { return plan.rows(); }
  Eigen::Index cols() const { return plan.cols(); }
};

inline constexpr int kDefaultSinkhornIterations = 2000;
inline constexpr double kDefaultSinkhornTolerance = 1e-7;

/// 1e-3 times the mean entry of the cost (1e-3 when the cost is all zero).
double default_epsilon(const Eigen::MatrixXd& cost);

Eigen::VectorXd uniform_marginal(Eigen::Index n);

/// Entropic optimal transport by log-domain alternating scaling. Potentials are
/// warm-started through a decreasing schedule of the regularization down to
/// `epsilon`; the final stage stops once the row-marginal L1 error is below
/// `tol` or after `max_iter` updates. The returned plan is then rounded onto
/// the exact marginals; `marginal_error` reports the error before rounding.
TransportPlan sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       double epsilon, int max_iter = kDefaultSinkhornIterations,
                       double tol = kDefaultSinkhornTolerance);

double transport_cost(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan);

Eigen::MatrixXd squared_distances(const Points& x, const Points& y);

struct WassersteinResult {
  double distance = 0.0;
  TransportPlan plan;
};

/// L2 Wasserstein distance between uniform measures on two point sets.
WassersteinResult wasserstein(const Points& pred, const Points& gt, std::optional<double> epsilon = std::nullopt);

/// All-pairs shortest paths over bones weighted by length. Joints in different
/// trees are separated by twice the larger of the two trees' diameters.
Eigen::MatrixXd skeleton_geodesics(const Skeleton& skeleton);

struct GwOptions {
  std::optional<double> epsilon;  // default 1e-3 * max(mean d_pred^2, mean d_gt^2)
  int max_outer = 20;
  // Inner Sinkhorn budget per outer step. Plans are rounded onto the marginals,
  // so a looser inner tolerance only affects the linearization point.
  int max_iter = 200;
  double tol = 1e-5;
  std::uint64_t seed = 0;
  // Number of perturbed starting plans tried besides the exact uniform plan.
  int perturbed_starts = 2;
  // Number of anchor pairings seeded from geodesic profiles.
  int anchor_starts = 4;
};

struct GwResult {
  double distance = 0.0;   // square root of the objective
  double objective = 0.0;  // sum |d_p(i,i') - d_g(k,k')|^2 pi_ik pi_i'k'
  TransportPlan plan;
  int starts = 0;
};

/// Exact quadratic objective for a given plan.
double gw_objective(const Eigen::MatrixXd& d_pred, const Eigen::MatrixXd& d_gt, const Eigen::MatrixXd& plan);

/// Entropic Gromov-Wasserstein between two metric measure spaces with uniform
/// weights. Each start alternates linearizing the objective at the current
/// plan and a Sinkhorn projection; the best objective over starts is returned.
/// `init_plans` adds caller-supplied starting plans.
GwResult gromov_wasserstein(const Eigen::MatrixXd& d_pred, const Eigen::MatrixXd& d_gt, const GwOptions& options = {},
                            const std::vector<Eigen::MatrixXd>& init_plans = {});

/// Geodesic GW between skeletons. The Euclidean Wasserstein plan of the joint
/// sets is added as one more starting plan.
GwResult gromov_wasserstein(const Skeleton& pred, const Skeleton& gt, const GwOptions& options = {});

}  // namespace rigfield
