#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rigfield/error.hpp"
#include "rigfield/icp.hpp"
#include "rigfield/transport.hpp"

using namespace rigfield;

namespace {

Eigen::MatrixXd random_cost(int n, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd c(n, m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) c(i, k) = u(rng);
  return c;
}

void check_marginals(const TransportPlan& p, double tol) {
  CHECK((p.plan.rowwise().sum() - p.a).cwiseAbs().maxCoeff() <= tol);
  CHECK((p.plan.colwise().sum().transpose() - p.b).cwiseAbs().maxCoeff() <= tol);
  CHECK(p.plan.minCoeff() >= 0.0);
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("one by one") {
    const TransportPlan p = sinkhorn(Eigen::MatrixXd::Constant(1, 1, 3.0), uniform_marginal(1), uniform_marginal(1), 1e-3);
    CHECK(p.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("two by two diagonal") {
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 0;
    const TransportPlan p = sinkhorn(c, uniform_marginal(2), uniform_marginal(2), 1e-3);
    Eigen::MatrixXd expect(2, 2);
    expect << 0.5, 0, 0, 0.5;
    CHECK((p.plan - expect).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(p.converged);
    check_marginals(p, 1e-12);
  }

  TEST_CASE("small problems land within one percent of the exact optimum") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 1 + trial % 6, m = 1 + (trial / 6) % 6;
      const Eigen::MatrixXd c = random_cost(n, m, rng);
      const TransportPlan p = sinkhorn(c, uniform_marginal(n), uniform_marginal(m), default_epsilon(c));
      const double exact = oracle::exact_uniform_ot(c);
      if (n == m && n <= 6) CHECK(exact == doctest::Approx(oracle::permutation_ot(c)).epsilon(1e-12));
      CHECK(transport_cost(c, p.plan) <= exact * 1.01 + 1e-12);
      check_marginals(p, 1e-6);
    }
  }

  TEST_CASE("precondition failures") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(sinkhorn(c, Eigen::Vector2d(0.7, 0.7), uniform_marginal(2), 1e-3), Error);
    CHECK_THROWS_AS(sinkhorn(c, uniform_marginal(2), uniform_marginal(2), 0.0), Error);
    c(0, 1) = std::nan("");
    CHECK_THROWS_AS(sinkhorn(c, uniform_marginal(2), uniform_marginal(2), 1e-3), Error);
    CHECK_THROWS_AS(sinkhorn(Eigen::MatrixXd::Ones(2, 3), uniform_marginal(2), uniform_marginal(2), 1e-3), Error);
  }

  TEST_CASE("wasserstein examples") {
    CHECK(wasserstein({Vec3::Zero()}, {Vec3(1, 0, 0)}).distance == doctest::Approx(1.0).epsilon(1e-12));
    const Points a{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.3, 0.7, 0.1)};
    CHECK(wasserstein(a, a, 1e-3).distance < 1e-2);
    CHECK(wasserstein({Vec3(0, 0, 0), Vec3(1, 0, 0)}, {Vec3(1, 0, 0), Vec3(0, 0, 0)}).distance < 1e-2);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Points x, y;
    for (int i = 0; i < 5; ++i) x.emplace_back(u(rng), u(rng), u(rng));
    for (int i = 0; i < 4; ++i) y.emplace_back(u(rng), u(rng), u(rng));
    const WassersteinResult xy = wasserstein(x, y), yx = wasserstein(y, x);
    CHECK(std::abs(xy.distance - yx.distance) <= 1e-6);
    CHECK(xy.plan.rows() == 5);
    CHECK(yx.plan.rows() == 4);
    CHECK(xy.distance * xy.distance <= oracle::exact_uniform_ot(squared_distances(x, y)) * 1.01);
  }

  TEST_CASE("geodesic examples") {
    const Eigen::MatrixXd chain = skeleton_geodesics(fixture::chain({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)}));
    CHECK(chain(0, 2) == doctest::Approx(2.0));
    CHECK(chain(2, 0) == chain(0, 2));
    CHECK(skeleton_geodesics(fixture::chain({Vec3(4, 5, 6)})) == Eigen::MatrixXd::Zero(1, 1));

    Skeleton y;
    y.joints = {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(-1, 1, 0), Vec3(1, 1, 0)};
    y.parents = {-1, 0, 1, 1};
    CHECK(skeleton_geodesics(y)(2, 3) == doctest::Approx(2.0));
    CHECK(skeleton_geodesics(y)(0, 3) == doctest::Approx(1.0 + 1.0));

    Skeleton forest;
    forest.joints = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(5, 0, 0), Vec3(5, 3, 0)};
    forest.parents = {-1, 0, -1, 2};
    const Eigen::MatrixXd f = skeleton_geodesics(forest);
    CHECK(f(0, 2) == doctest::Approx(6.0));
    CHECK(f(1, 3) == doctest::Approx(6.0));

    Skeleton points;
    points.joints = {Vec3(0, 0, 0), Vec3(0, 2, 0)};
    points.parents = {-1, -1};
    CHECK(skeleton_geodesics(points)(0, 1) == doctest::Approx(2.0));
  }

  TEST_CASE("gw objective equals the quadruple sum") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd d1 = random_cost(4, 4, rng), d2 = random_cost(3, 3, rng);
    const Eigen::MatrixXd plan = random_cost(4, 3, rng) / 12.0;
    CHECK(gw_objective(d1, d2, plan) == doctest::Approx(oracle::gw_sum(d1, d2, plan)).epsilon(1e-12));
  }

  TEST_CASE("gw on three-joint chains matches the permutation brute force") {
    const Skeleton a = fixture::chain({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)});
    const Skeleton b = fixture::chain({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)});
    const GwResult r = gromov_wasserstein(a, b);
    const double brute = std::sqrt(oracle::gw_permutation_min(skeleton_geodesics(a), skeleton_geodesics(b)));
    CHECK(r.distance > 0.0);
    CHECK(r.distance == doctest::Approx(brute).epsilon(0.05));
    CHECK(r.objective == doctest::Approx(gw_objective(skeleton_geodesics(a), skeleton_geodesics(b), r.plan.plan)));
  }

  TEST_CASE("gw is symmetric and isometry invariant") {
    Skeleton a;
    a.joints = {Vec3(0, 0, 0), Vec3(0, 0.2, 0), Vec3(-0.15, 0.3, 0), Vec3(0.15, 0.3, 0.05), Vec3(0, 0.45, 0),
                Vec3(-0.2, 0.45, 0.1)};
    a.parents = {-1, 0, 1, 1, 1, 2};
    Skeleton b = a;
    b.joints.push_back(Vec3(0.25, 0.4, 0.05));
    b.parents.push_back(3);
    b.joints[5] += Vec3(0.03, -0.02, 0);
    const GwResult ab = gromov_wasserstein(a, b), ba = gromov_wasserstein(b, a);
    CHECK(std::abs(ab.distance - ba.distance) <= 1e-6);

    std::mt19937_64 rng(7);
    RigidTransform t;
    t.rotation = oracle::random_rotation(rng);
    t.translation = Vec3(0.4, -1, 2);
    CHECK(gromov_wasserstein(a, apply(t, a)).distance < 1e-2);
    CHECK(std::abs(gromov_wasserstein(apply(t, a), b).distance - ab.distance) < 1e-2);
    CHECK(gromov_wasserstein(a, a).distance < 1e-2);
  }

  TEST_CASE("gw plans keep their marginals") {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd d1 = random_cost(5, 5, rng), d2 = random_cost(4, 4, rng);
    const GwResult r = gromov_wasserstein((d1 + d1.transpose()) / 2, (d2 + d2.transpose()) / 2);
    check_marginals(r.plan, 1e-9);
    CHECK(r.starts >= 1);
  }
}
