#include "rigfield/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rigfield/error.hpp"

namespace rigfield {

double default_epsilon(const Eigen::MatrixXd& cost) {
  const double mean = cost.size() > 0 ? cost.mean() : 0.0;
  return mean > 0.0 ? 1e-3 * mean : 1e-3;
}

Eigen::VectorXd uniform_marginal(Eigen::Index n) { return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); }

namespace {

void check_marginal(const Eigen::VectorXd& m, const char* name) {
  require(m.size() >= 1, std::string(name) + " marginal is empty");
  require(m.allFinite() && (m.array() > 0.0).all(), std::string(name) + " marginal must be positive");
  require(std::abs(m.sum() - 1.0) <= 1e-9, std::string(name) + " marginal does not sum to 1");
}

// Log-sum-exp of a vector.
double lse(const Eigen::ArrayXd& x) {
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((x - mx).exp().sum());
}

struct Potentials {
  Eigen::VectorXd f, g;
};

// Row-marginal L1 error of the plan implied by the potentials.
double row_error(const Eigen::MatrixXd& cost, const Potentials& p, const Eigen::VectorXd& a, double eps) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    const Eigen::ArrayXd z = (p.f[i] + p.g.array() - cost.row(i).transpose().array()) / eps;
    err += std::abs(z.exp().sum() - a[i]);
  }
  return err;
}

// Alternating updates at a fixed regularization, checking the row marginals
// every few updates. Returns the number of updates and the last row error.
std::pair<int, double> scale_stage(const Eigen::MatrixXd& cost, const Eigen::VectorXd& log_a,
                                   const Eigen::VectorXd& log_b, const Eigen::VectorXd& a, double eps, int max_iter,
                                   double tol, Potentials& p) {
  const Eigen::Index n = cost.rows(), m = cost.cols();
  double err = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < max_iter) {
    for (Eigen::Index i = 0; i < n; ++i)
      p.f[i] = eps * log_a[i] - eps * lse((p.g.array() - cost.row(i).transpose().array()) / eps);
    for (Eigen::Index k = 0; k < m; ++k)
      p.g[k] = eps * log_b[k] - eps * lse((p.f.array() - cost.col(k).array()) / eps);
    ++it;
    if (it % 4 != 0 && it < max_iter) continue;
    err = row_error(cost, p, a, eps);
    if (!std::isfinite(err)) throw Error(ErrorKind::Numeric, "Sinkhorn iteration diverged");
    if (err < tol) break;
  }
  return {it, err};
}

// Projects a nearly feasible plan onto the exact marginals: shrink rows and
// columns that carry too much mass, then spread the deficit as a rank-one term.
void round_to_marginals(Eigen::MatrixXd& plan, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd r = plan.rowwise().sum();
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    if (r[i] > a[i]) plan.row(i) *= a[i] / r[i];
  const Eigen::VectorXd c = plan.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < plan.cols(); ++k)
    if (c[k] > b[k]) plan.col(k) *= b[k] / c[k];
  const Eigen::VectorXd er = a - plan.rowwise().sum();
  const Eigen::VectorXd ec = b - plan.colwise().sum().transpose();
  const double mass = er.sum();
  if (mass > 0.0) plan += (er.cwiseMax(0.0) * ec.cwiseMax(0.0).transpose()) / mass;
}

void check_problem(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double epsilon,
                   int max_iter, double tol) {
  require(cost.rows() == a.size() && cost.cols() == b.size(), "cost shape does not match the marginals");
  require(cost.allFinite(), "cost matrix contains NaN or infinite entries");
  check_marginal(a, "row");
  check_marginal(b, "column");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
  require(max_iter >= 1, "max_iter must be at least 1");
  require(tol > 0.0, "tolerance must be positive");
}

// Solves from the given potentials. Cold starts first anneal the
// regularization from the cost range down to epsilon.
TransportPlan solve(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double epsilon,
                    int max_iter, double tol, Potentials& p, bool warm) {
  const Eigen::VectorXd log_a = a.array().log(), log_b = b.array().log();
  TransportPlan out;
  if (!warm) {
    p.f = Eigen::VectorXd::Zero(a.size());
    p.g = Eigen::VectorXd::Zero(b.size());
    const double range = cost.maxCoeff() - cost.minCoeff();
    for (double eps = range; eps > epsilon; eps *= 0.25)
      out.iterations += scale_stage(cost, log_a, log_b, a, eps, 40, std::max(tol, 1e-4), p).first;
  }
  const auto [it, err] = scale_stage(cost, log_a, log_b, a, epsilon, max_iter, tol, p);
  out.iterations += it;
  out.marginal_error = err;
  out.converged = err < tol;

  out.plan.resize(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index k = 0; k < cost.cols(); ++k) out.plan(i, k) = std::exp((p.f[i] + p.g[k] - cost(i, k)) / epsilon);
  if (!out.plan.allFinite()) throw Error(ErrorKind::Numeric, "Sinkhorn plan is not finite");
  round_to_marginals(out.plan, a, b);
  out.a = a;
  out.b = b;
  return out;
}

}  // namespace

TransportPlan sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       double epsilon, int max_iter, double tol) {
  check_problem(cost, a, b, epsilon, max_iter, tol);
  Potentials p;
  return solve(cost, a, b, epsilon, max_iter, tol, p, false);
}

double transport_cost(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan) { return (cost.array() * plan.array()).sum(); }

Eigen::MatrixXd squared_distances(const Points& x, const Points& y) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < y.size(); ++k)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (x[i] - y[k]).squaredNorm();
  return d;
}

namespace {

bool points_before(const Points& x, const Points& y) {
  if (x.size() != y.size()) return x.size() < y.size();
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int c = 0; c < 3; ++c)
      if (x[i][c] != y[i][c]) return x[i][c] < y[i][c];
  return false;
}

}  // namespace

WassersteinResult wasserstein(const Points& pred, const Points& gt, std::optional<double> epsilon) {
  require(!pred.empty() && !gt.empty(), "Wasserstein needs two non-empty point sets");
  // One orientation for both argument orders keeps the distance symmetric.
  const bool swap = points_before(gt, pred);
  const Eigen::MatrixXd cost = swap ? squared_distances(gt, pred) : squared_distances(pred, gt);
  const double eps = epsilon.value_or(default_epsilon(cost));
  WassersteinResult out;
  out.plan = sinkhorn(cost, uniform_marginal(cost.rows()), uniform_marginal(cost.cols()), eps);
  out.distance = std::sqrt(std::max(0.0, transport_cost(cost, out.plan.plan)));
  if (swap) {
    out.plan.plan.transposeInPlace();
    std::swap(out.plan.a, out.plan.b);
  }
  return out;
}

Eigen::MatrixXd skeleton_geodesics(const Skeleton& skeleton) {
  require(!skeleton.joints.empty(), "geodesics need a non-empty skeleton");
  validate(skeleton);
  const auto n = static_cast<Eigen::Index>(skeleton.size());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    const int p = skeleton.parents[i];
    if (p >= 0) d(i, p) = d(p, i) = (skeleton.joints[i] - skeleton.joints[p]).norm();
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);

  // Component id = smallest reachable joint index; diameter per component.
  std::vector<Eigen::Index> component(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    component[i] = i;
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::isfinite(d(i, j))) {
        component[i] = component[j];
        break;
      }
  }
  std::vector<double> diameter(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::isfinite(d(i, j))) diameter[component[i]] = std::max(diameter[component[i]], d(i, j));

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isfinite(d(i, j))) continue;
      double penalty = 2.0 * std::max(diameter[component[i]], diameter[component[j]]);
      // Two isolated joints: no intrinsic scale, fall back to their separation.
      if (penalty == 0.0) penalty = (skeleton.joints[i] - skeleton.joints[j]).norm();
      d(i, j) = penalty;
    }
  return d;
}

double gw_objective(const Eigen::MatrixXd& d_pred, const Eigen::MatrixXd& d_gt, const Eigen::MatrixXd& plan) {
  const Eigen::VectorXd r = plan.rowwise().sum();
  const Eigen::VectorXd c = plan.colwise().sum().transpose();
  const Eigen::MatrixXd dp2 = d_pred.array().square();
  const Eigen::MatrixXd dg2 = d_gt.array().square();
  const double cross = (plan.array() * (d_pred * plan * d_gt.transpose()).array()).sum();
  return r.dot(dp2 * r) + c.dot(dg2 * c) - 2.0 * cross;
}

namespace {

struct GwRun {
  double objective;
  TransportPlan plan;
};

GwRun descend(const Eigen::MatrixXd& dp, const Eigen::MatrixXd& dg, const Eigen::MatrixXd& const_c,
              const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps, const GwOptions& options,
              Eigen::MatrixXd plan) {
  TransportPlan current;
  Potentials pot;
  double obj = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < options.max_outer; ++outer) {
    const Eigen::MatrixXd cost = const_c - 2.0 * dp * plan * dg.transpose();
    check_problem(cost, a, b, eps, options.max_iter, options.tol);
    current = solve(cost, a, b, eps, options.max_iter, options.tol, pot, outer > 0);
    plan = current.plan;
    const double next = gw_objective(dp, dg, plan);
    if (!std::isfinite(next)) throw Error(ErrorKind::Numeric, "Gromov-Wasserstein objective is not finite");
    const bool settled = std::abs(obj - next) <= 1e-9 * (std::abs(next) + eps * eps);
    obj = next;
    if (settled) break;
  }
  return {obj, std::move(current)};
}

}  // namespace

namespace {

GwResult gw_oriented(const Eigen::MatrixXd& d_pred, const Eigen::MatrixXd& d_gt, const GwOptions& options,
                     const std::vector<Eigen::MatrixXd>& init_plans) {
  const Eigen::Index n = d_pred.rows(), m = d_gt.rows();
  const Eigen::VectorXd a = uniform_marginal(n), b = uniform_marginal(m);
  const Eigen::MatrixXd uniform = a * b.transpose();

  const double scale = std::max(d_pred.array().square().mean(), d_gt.array().square().mean());
  GwResult result;
  if (scale == 0.0 || (n == 1 && m == 1)) {
    result.plan.plan = uniform;
    result.plan.a = a;
    result.plan.b = b;
    result.plan.converged = true;
    result.objective = gw_objective(d_pred, d_gt, uniform);
    result.distance = std::sqrt(std::max(0.0, result.objective));
    result.starts = 0;
    return result;
  }
  const double eps = options.epsilon.value_or(1e-3 * scale);
  require(eps > 0.0, "GW epsilon must be positive");

  Eigen::MatrixXd const_c(n, m);
  const Eigen::VectorXd row_term = d_pred.array().square().matrix() * a;
  const Eigen::VectorXd col_term = d_gt.array().square().matrix() * b;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < m; ++k) const_c(i, k) = row_term[i] + col_term[k];

  // Starting plans: the exact uniform plan, caller plans, then symmetry-broken
  // variants. A uniform start stays invariant under automorphisms of either
  // skeleton, so it cannot settle on one of several mirror-image matchings.
  std::vector<Eigen::MatrixXd> starts{uniform};
  starts.insert(starts.end(), init_plans.begin(), init_plans.end());

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  auto perturbed = [&](const Eigen::MatrixXd& base) {
    Eigen::MatrixXd p = base;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < m; ++k) p(i, k) *= 1.0 + 0.05 * jitter(rng);
    return Eigen::MatrixXd(p / p.sum());
  };
  for (int s = 0; s < options.perturbed_starts; ++s) starts.push_back(perturbed(uniform));
  for (std::size_t s = 1; s < 1 + init_plans.size(); ++s) starts.push_back(perturbed(starts[s]));

  // Anchor starts: pin the most eccentric predicted joint to reference joints
  // with the most similar eccentricity and match geodesic profiles from there.
  if (options.anchor_starts > 0) {
    const Eigen::VectorXd ecc_p = d_pred.rowwise().maxCoeff();
    const Eigen::VectorXd ecc_g = d_gt.rowwise().maxCoeff();
    Eigen::Index anchor = 0;
    ecc_p.maxCoeff(&anchor);
    std::vector<Eigen::Index> candidates(m);
    for (Eigen::Index k = 0; k < m; ++k) candidates[k] = k;
    std::stable_sort(candidates.begin(), candidates.end(), [&](Eigen::Index x, Eigen::Index y) {
      return std::abs(ecc_g[x] - ecc_p[anchor]) < std::abs(ecc_g[y] - ecc_p[anchor]);
    });
    candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(options.anchor_starts)));
    for (Eigen::Index k0 : candidates) {
      Eigen::MatrixXd cost(n, m);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < m; ++k) cost(i, k) = std::pow(d_pred(anchor, i) - d_gt(k0, k), 2);
      starts.push_back(perturbed(sinkhorn(cost, a, b, default_epsilon(cost) + eps, options.max_iter, 1e-6).plan));
    }
  }

  bool have = false;
  for (const Eigen::MatrixXd& start : starts) {
    GwRun run = descend(d_pred, d_gt, const_c, a, b, eps, options, start);
    ++result.starts;
    if (!have || run.objective < result.objective) {
      have = true;
      result.objective = run.objective;
      result.plan = std::move(run.plan);
    }
    if (result.objective <= 1e-8 * scale * scale) break;
  }
  result.distance = std::sqrt(std::max(0.0, result.objective));
  return result;
}

// Strict ordering used to pick one orientation for both argument orders.
bool before(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x.data()[i] != y.data()[i]) return x.data()[i] < y.data()[i];
  return false;
}

}  // namespace

GwResult gromov_wasserstein(const Eigen::MatrixXd& d_pred, const Eigen::MatrixXd& d_gt, const GwOptions& options,
                            const std::vector<Eigen::MatrixXd>& init_plans) {
  require(d_pred.rows() >= 1 && d_pred.rows() == d_pred.cols(), "predicted distance matrix must be square");
  require(d_gt.rows() >= 1 && d_gt.rows() == d_gt.cols(), "reference distance matrix must be square");
  require(d_pred.allFinite() && d_gt.allFinite(), "distance matrices must be finite");
  require(options.max_outer >= 1, "GW needs at least one outer iteration");
  for (const Eigen::MatrixXd& p : init_plans)
    require(p.rows() == d_pred.rows() && p.cols() == d_gt.rows(), "initial plan shape does not match");

  // Solve in a canonical orientation so that swapping the arguments gives the
  // transposed plan and the same distance.
  if (!before(d_gt, d_pred)) return gw_oriented(d_pred, d_gt, options, init_plans);
  std::vector<Eigen::MatrixXd> swapped;
  for (const Eigen::MatrixXd& p : init_plans) swapped.push_back(p.transpose());
  GwResult r = gw_oriented(d_gt, d_pred, options, swapped);
  r.plan.plan.transposeInPlace();
  std::swap(r.plan.a, r.plan.b);
  return r;
}

GwResult gromov_wasserstein(const Skeleton& pred, const Skeleton& gt, const GwOptions& options) {
  require(!pred.joints.empty() && !gt.joints.empty(), "GW needs two non-empty skeletons");
  const Eigen::MatrixXd dp = skeleton_geodesics(pred);
  const Eigen::MatrixXd dg = skeleton_geodesics(gt);
  const WassersteinResult w = wasserstein(pred.joints, gt.joints);
  return gromov_wasserstein(dp, dg, options, {w.plan.plan});
}

}  // namespace rigfield
