// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rigfield/animate.hpp"
#include "rigfield/bvh.hpp"
#include "rigfield/error.hpp"
#include "rigfield/icp.hpp"
#include "rigfield/metrics.hpp"
#include "rigfield/skeleton_field.hpp"
#include "rigfield/skin_field.hpp"
#include "rigfield/syngen.hpp"
#include "rigfield/transport.hpp"
#include "rigfield/voxelize.hpp"

using namespace rigfield;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

SkinWeights from_dense(const Eigen::MatrixXd& w) {
  SkinWeights s;
  s.joint_count = static_cast<int>(w.cols());
  for (Eigen::Index v = 0; v < w.rows(); ++v) {
    std::vector<Influence> row;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (w(v, j) > 0) row.push_back({static_cast<int>(j), w(v, j)});
    s.entries.push_back(row);
  }
  return s;
}

double max_row_sum_error(const SkinWeights& s) {
  double worst = 0.0;
  for (const auto& row : s.entries) {
    double sum = 0.0;
    for (const auto& inf : row) sum += inf.weight;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

// 1. Skeleton field round trip on random forests.
void round_trip(Outcome& out) {
  const int res = 64;
  const auto t0 = Clock::now();
  int clean_ok = 0, noisy_ok = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 pick(1000 + t);
    const int joints = std::uniform_int_distribution<int>(2, 20)(pick);
    const int roots = std::uniform_int_distribution<int>(1, std::min(3, joints))(pick);
    const Family family = std::array{Family::Chain, Family::Star, Family::Tree}[t % 3];
    SynthSpec spec{.family = family, .joint_count = joints, .root_count = roots, .min_separation = 4.0 / res,
                   .skin = false, .normalize = false, .seed = static_cast<std::uint64_t>(t)};
    const Skeleton gt = generate(spec).skeleton;
    const SkeletonField field = encode_field(gt, voxelize_skeleton(gt, res, 2));
    const ClusterParams params = ClusterParams::for_resolution(res, 2.0);
    auto recovered = [&](const SkeletonField& f) {
      try {
        const Skeleton s = decode_skeleton(f, params);
        const TopologyMatch m = match_topology(s, gt);
        return s.size() == gt.size() && m.exact && m.max_position_error < 1.0 / res;
      } catch (const Error&) {
        return false;
      }
    };
    clean_ok += recovered(field);
    SkeletonField noisy = field;
    add_offset_noise(noisy, 0.25 / res, 5000 + t);
    noisy_ok += recovered(noisy);
  }
  const double elapsed = seconds_since(t0);
  out.detail << "clean " << clean_ok << "/" << trials << ", noisy " << noisy_ok << "/" << trials << ", "
             << elapsed << " s; ";
  out.expect(clean_ok >= 0.95 * trials, "clean recovery below 95%");
  out.expect(noisy_ok >= 0.90 * trials, "noisy recovery below 90%");
  out.expect(elapsed < 60.0, "runtime");
}

// 2. Confidence values against a direct evaluation.
void confidence(Outcome& out) {
  const int res = 64;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cell(0, res - 1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto center = [&](const Voxel& v) {
    return Vec3(-0.5 + (v[0] + 0.5) / res, -0.5 + (v[1] + 0.5) / res, -0.5 + (v[2] + 0.5) / res);
  };
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Voxel v{cell(rng), cell(rng), cell(rng)};
    const Skeleton s = fixture::chain({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))});
    const FieldSample f = encode_field(s, SparseVoxelGrid(res, {v})).samples[0];
    const Vec3 p = center(v);
    double d1 = (p - s.joints[0]).squaredNorm(), d2 = (p - s.joints[1]).squaredNorm();
    if (d1 > d2) std::swap(d1, d2);
    const double expected = std::clamp(1.0 - d1 / d2, 0.0, 1.0);
    worst = std::max(worst, std::abs(f.conf_j - expected));
  }
  out.detail << "max deviation " << worst << "; ";
  out.expect(worst <= 1e-9, "random configurations");

  int equi_bad = 0, at_joint_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const Voxel v{cell(rng), cell(rng), cell(rng)};
    const Vec3 p = center(v);
    // Dyadic offsets keep both squared distances exactly equal.
    const Vec3 d(std::uniform_int_distribution<int>(-8, 8)(rng) / 1024.0,
                 std::uniform_int_distribution<int>(-8, 8)(rng) / 1024.0, (1 + i % 8) / 1024.0);
    const Skeleton s = fixture::chain({p + d, p - d});
    equi_bad += encode_field(s, SparseVoxelGrid(res, {v})).samples[0].conf_j != 0.0;
    const Skeleton at = fixture::chain({p, Vec3(u(rng), u(rng), u(rng))});
    at_joint_bad += encode_field(at, SparseVoxelGrid(res, {v})).samples[0].conf_j != 1.0;
  }
  out.expect(equi_bad == 0, "equidistant configurations");
  out.expect(at_joint_bad == 0, "at-joint configurations");
}

FieldVotes vote_cloud(const Vec3& center, const Vec3& parent, int count, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  FieldVotes v;
  for (int i = 0; i < count; ++i) {
    v.joints.push_back(center + Vec3(n(rng), n(rng), n(rng)));
    v.parents.push_back(parent + Vec3(n(rng), n(rng), n(rng)));
    v.conf_j.push_back(1.0);
    v.conf_p.push_back(1.0);
  }
  return v;
}

void append_votes(FieldVotes& dst, const FieldVotes& src) {
  dst.joints.insert(dst.joints.end(), src.joints.begin(), src.joints.end());
  dst.parents.insert(dst.parents.end(), src.parents.begin(), src.parents.end());
  dst.conf_j.insert(dst.conf_j.end(), src.conf_j.begin(), src.conf_j.end());
  dst.conf_p.insert(dst.conf_p.end(), src.conf_p.begin(), src.conf_p.end());
}

// 3. White-box clustering checks.
void clustering(Outcome& out) {
  ClusterParams p = ClusterParams::with_bandwidth(0.1);
  out.expect(p.iterations == 10 && std::abs(p.convergence_tol - 0.01) < 1e-15 && std::abs(p.merge_radius - 0.05) < 1e-15,
             "default parameters");

  ClusterParams never = p;
  never.convergence_tol = 0.0;
  MeanShiftResult r = mean_shift({Vec3::Zero(), Vec3(0.05, 0, 0)}, {1.0, 1.0}, never);
  out.expect(r.passes == 10 && !r.early_stop, "pass budget");

  r = mean_shift({Vec3::Zero(), Vec3::Zero(), Vec3(1, 0, 0)}, {1.0, 1.0, 1.0}, p);
  out.expect(r.passes == 1 && r.early_stop && r.last_max_shift <= p.convergence_tol, "early stop");

  // One pass by hand: Gaussian weights times confidence, neighbors within h.
  ClusterParams one = ClusterParams::with_bandwidth(1.0);
  one.iterations = 1;
  r = mean_shift({Vec3::Zero(), Vec3(0.5, 0, 0)}, {1.0, 3.0}, one);
  const double k = std::exp(-0.25 / 2.0);
  out.expect(std::abs(r.modes[0].x() - 1.5 * k / (1.0 + 3.0 * k + 1e-8)) < 1e-12 &&
                 std::abs(r.modes[1].x() - 1.5 / (k + 3.0 + 1e-8)) < 1e-12,
             "hand-computed pass");

  const Points line{Vec3(0, 0, 0), Vec3(0.05, 0, 0), Vec3(0.1, 0, 0), Vec3(0.3, 0, 0)};
  out.expect(merge_clusters(line, 0.05) == std::vector<int>{0, 0, 0, 1}, "merge at radius");
  out.expect(merge_clusters(line, 0.049) == std::vector<int>{0, 1, 2, 3}, "merge below radius");

  std::mt19937_64 rng(3);
  const double h = 0.03;
  FieldVotes small = vote_cloud(Vec3::Zero(), Vec3::Zero(), 3, 1e-5, rng);
  append_votes(small, vote_cloud(Vec3(0.3, 0, 0), Vec3::Zero(), 2, 1e-5, rng));
  ClusterTrace trace;
  const Skeleton kept = cluster_skeleton(small, ClusterParams::with_bandwidth(h), &trace);
  out.expect(kept.size() == 1 && trace.cluster_sizes == std::vector<int>{3, 2} && trace.clusters_kept == 1,
             "s_min filtering");

  const Points c{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  out.expect(link_parents(c, {Vec3(0.1, 0, 0), Vec3(0.2, 0, 0), Vec3(1.4, 0, 0)}, {1, 1, 1}) ==
                 std::vector<int>{-1, 0, 1},
             "argmin parent linking");

  // Three clusters forming a Y: root at the origin, two children.
  const Vec3 a(0, 0, 0), b(0.2, 0, 0), d(0, 0.2, 0);
  FieldVotes y = vote_cloud(a, a, 20, 0.002, rng);
  append_votes(y, vote_cloud(b, a, 15, 0.002, rng));
  append_votes(y, vote_cloud(d, a, 10, 0.002, rng));
  const Skeleton s = cluster_skeleton(y, ClusterParams::with_bandwidth(h), &trace);
  bool ok = s.size() == 3 && s.parents == std::vector<int>{-1, 0, 0} && trace.clusters_kept == 3;
  if (ok) ok = (s.joints[0] - a).norm() < 0.005 && (s.joints[1] - d).norm() < 0.005 && (s.joints[2] - b).norm() < 0.005;
  out.expect(ok, "three-cluster vote set");
}

Mesh random_soup(int triangles, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), s(-0.08, 0.08);
  Mesh m;
  for (int t = 0; t < triangles; ++t) {
    const Vec3 c(u(rng), u(rng), u(rng));
    const int base = static_cast<int>(m.vertices.size());
    for (int k = 0; k < 3; ++k) m.vertices.push_back(c + Vec3(s(rng), s(rng), s(rng)));
    m.triangles.push_back({base, base + 1, base + 2});
  }
  return m;
}

// 4. BVH against brute force, then speed.
void bvh_queries(Outcome& out) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  const std::vector<Mesh> meshes = {
      random_soup(1000, rng),
      make_capsule(Vec3(-0.3, -0.1, 0), Vec3(0.3, 0.1, 0.05), 0.1, 16),
      make_icosphere(Vec3(0.05, 0, 0), 0.35, 2),
      make_uv_sphere(Vec3::Zero(), 0.4, 20, 24),
      generate(SynthSpec{.family = Family::Quadruped, .seed = 4}).mesh,
  };
  int mismatches = 0;
  std::size_t largest = 0;
  for (const Mesh& m : meshes) {
    largest = std::max(largest, m.triangles.size());
    const TriangleBvh bvh = TriangleBvh::build(m);
    for (int i = 0; i < 500; ++i) {
      const Vec3 q(u(rng), u(rng), u(rng));
      const SurfaceHit a = bvh.closest_point(q), b = closest_point_brute_force(m, q);
      mismatches += a.triangle != b.triangle || std::abs(a.distance - b.distance) > 1e-9;
    }
  }
  out.detail << "mismatches " << mismatches << " (largest mesh " << largest << " triangles); ";
  out.expect(mismatches == 0, "oracle agreement");

  const Mesh big = make_uv_sphere(Vec3::Zero(), 0.4, 158, 160);
  Points queries;
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  for (int i = 0; i < 10000; ++i) queries.emplace_back(w(rng), w(rng), w(rng));
  const auto tb = Clock::now();
  const TriangleBvh bvh = TriangleBvh::build(big);
  std::vector<int> fast;
  for (const Vec3& q : queries) fast.push_back(bvh.closest_point(q).triangle);
  const double t_bvh = seconds_since(tb);
  const auto tf = Clock::now();
  int disagree = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) disagree += closest_point_brute_force(big, queries[i]).triangle != fast[i];
  const double t_brute = seconds_since(tf);
  const double elapsed = seconds_since(t0);
  out.detail << big.triangles.size() << " triangles: bvh incl. build " << t_bvh << " s, brute " << t_brute
             << " s, speedup " << t_brute / t_bvh << "x, total " << elapsed << " s; ";
  out.expect(big.triangles.size() >= 50000, "benchmark mesh size");
  out.expect(disagree == 0, "benchmark agreement");
  out.expect(t_brute >= 10.0 * t_bvh, "speedup");
  out.expect(elapsed < 120.0, "runtime");
}

// 5. Barycentric transfer against nearest vertex on unevenly sampled spheres.
void transfer_fidelity(Outcome& out) {
  const Skeleton skel = fixture::chain({Vec3(0, -0.3, 0), Vec3(0, -0.1, 0), Vec3(0.05, 0.1, 0), Vec3(0, 0.3, 0)});
  const Mesh dst = make_icosphere(Vec3::Zero(), 0.4, 4);
  Rig src;
  src.mesh = make_uv_sphere(Vec3::Zero(), 0.4, 15, 22);
  src.skeleton = skel;
  src.skin = analytic_skin(skel, src.mesh.vertices);
  const double ratio = static_cast<double>(dst.vertices.size()) / static_cast<double>(src.mesh.vertices.size());
  const Eigen::MatrixXd truth = analytic_skin(skel, dst.vertices).dense();
  auto l1 = [&](const SkinWeights& s) { return (s.dense() - truth).cwiseAbs().rowwise().sum().mean(); };
  const double bvh = l1(transfer_skin_bvh(src, dst)), nn = l1(transfer_skin_nn(src, dst));
  out.detail << "decimation " << ratio << ", mean l1 bvh " << bvh << ", nn " << nn << ", ratio " << nn / bvh << "; ";
  out.expect(ratio >= 7.5 && ratio <= 8.5, "decimation ratio");
  out.expect(bvh < nn, "bvh not better");
  out.expect(nn >= 2.0 * bvh, "improvement below 2x");
}

// 6. Partition of unity over the synthetic corpus.
void partition_of_unity(Outcome& out) {
  std::size_t decoded = 0, transferred = 0;
  double worst_decode = 0.0, worst_bvh = 0.0, worst_nn = 0.0;
  std::mt19937_64 rng(6);
  int seed = 0;
  while (decoded < 10000 || transferred < 10000) {
    const Family family = std::array{Family::Chain, Family::Star, Family::Tree, Family::Quadruped}[seed % 4];
    const Rig rig = generate(SynthSpec{.family = family,
                                       .joint_count = 3 + seed % 15,
                                       .root_count = family == Family::Quadruped ? 1 : 1 + seed % 2,
                                       .mesh = seed % 3 == 0 ? MeshStyle::Sphere : MeshStyle::Capsule,
                                       .seed = static_cast<std::uint64_t>(seed)});
    const Rig other = generate(SynthSpec{.family = Family::Tree, .joint_count = 6, .seed = 100u + seed});

    SkinEmbeddings e;
    e.joint_embeddings = random_matrix(static_cast<Eigen::Index>(rig.skeleton.size()), e.channels, rng);
    e.vertex_embeddings = encode_vertex_embeddings(e.joint_embeddings, *rig.skin);
    e.temperatures = random_matrix(e.vertex_embeddings.rows(), 1, rng).array().abs() + 0.2;
    e.lift_joint = {random_matrix(e.lifted_dim, e.channels, rng, 0.5), random_matrix(e.lifted_dim, 1, rng, 0.5)};
    e.lift_vertex = {random_matrix(e.lifted_dim, e.channels, rng, 0.5), random_matrix(e.lifted_dim, 1, rng, 0.5)};
    const SkinWeights d = decode_skin(e);
    worst_decode = std::max(worst_decode, max_row_sum_error(d));
    decoded += d.entries.size();

    const SkinWeights b = transfer_skin_bvh(rig, other.mesh), n = transfer_skin_nn(rig, other.mesh);
    worst_bvh = std::max(worst_bvh, max_row_sum_error(b));
    worst_nn = std::max(worst_nn, max_row_sum_error(n));
    transferred += b.entries.size();
    ++seed;
  }
  out.detail << seed << " rigs, " << decoded << " decoded and " << transferred
             << " transferred vertices; worst |sum-1| decode " << worst_decode << ", bvh " << worst_bvh << ", nn "
             << worst_nn << "; ";
  out.expect(worst_decode <= 1e-6 && worst_bvh <= 1e-6 && worst_nn <= 1e-6, "row sums");
}

// 7. Embedding fits reproduce simple skins.
void skin_fit(Outcome& out) {
  const Skeleton four = fixture::chain({Vec3(-0.3, 0, 0), Vec3(-0.1, 0, 0), Vec3(0.1, 0, 0), Vec3(0.3, 0, 0)});
  const FitConfig config;
  out.expect(config.iterations <= 5000, "iteration budget");

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(500, 4);
  for (int v = 0; v < 500; ++v) onehot(v, v % 4) = 1.0;
  Eigen::MatrixXd d = decode_skin_dense(fit_skin_embeddings(from_dense(onehot), four, config).embeddings);
  const double kl_onehot = mean_kl(onehot, d);
  int argmax_ok = 0;
  for (int v = 0; v < 500; ++v) {
    Eigen::Index a;
    d.row(v).maxCoeff(&a);
    argmax_ok += a == v % 4;
  }

  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(500, 4, 0.25);
  d = decode_skin_dense(fit_skin_embeddings(from_dense(uniform), four, config).embeddings);
  const double l1_uniform = (d - uniform).cwiseAbs().rowwise().sum().mean();

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.4, 0.4), v(-0.1, 0.1);
  Points pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), v(rng), v(rng));
  const Eigen::MatrixXd falloff = analytic_skin(four, pts).dense();
  d = decode_skin_dense(fit_skin_embeddings(from_dense(falloff), four, config).embeddings);
  const double kl_falloff = mean_kl(falloff, d);

  out.detail << "one-hot KL " << kl_onehot << " argmax " << argmax_ok << "/500, uniform l1 " << l1_uniform
             << ", falloff KL " << kl_falloff << "; ";
  out.expect(kl_onehot < 0.05, "one-hot KL");
  out.expect(argmax_ok == 500, "one-hot argmax");
  out.expect(l1_uniform < 0.02, "uniform l1");
  out.expect(kl_falloff < 0.1, "falloff KL");
}

// 8. Sinkhorn against exact transport.
void sinkhorn_oracle(Outcome& out) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel = 0.0, worst_marginal = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng), m = size(rng);
    Eigen::MatrixXd cost(n, m);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < m; ++c) cost(r, c) = u(rng);
    const Eigen::VectorXd a = uniform_marginal(n), b = uniform_marginal(m);
    const TransportPlan p = sinkhorn(cost, a, b, default_epsilon(cost));
    const double exact = oracle::exact_uniform_ot(cost);
    worst_rel = std::max(worst_rel, std::abs(transport_cost(cost, p.plan) - exact) / exact);
    worst_marginal = std::max({worst_marginal, (p.plan.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                               (p.plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff()});
  }
  out.detail << "worst relative gap " << worst_rel << ", worst marginal error " << worst_marginal << "; ";
  out.expect(worst_rel <= 0.01, "cost gap");
  out.expect(worst_marginal <= 1e-6, "marginals");
}

Skeleton random_tree(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  Skeleton s;
  for (int i = 0; i < n; ++i) {
    s.joints.emplace_back(u(rng), u(rng), u(rng));
    s.parents.push_back(i == 0 ? -1 : std::uniform_int_distribution<int>(0, i - 1)(rng));
  }
  return s;
}

// 9. Metric axioms.
void metric_axioms(Outcome& out) {
  double worst_identity = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    const Rig gt = generate(SynthSpec{.family = seed % 2 ? Family::Quadruped : Family::Tree,
                                      .joint_count = 6 + seed,
                                      .seed = static_cast<std::uint64_t>(seed)});
    for (double v : metric_values(evaluate(gt, gt))) worst_identity = std::max(worst_identity, v);
  }

  std::mt19937_64 rng(9);
  double w_asym = 0.0, gw_asym = 0.0, gw_motion = 0.0, gw3 = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Skeleton a = random_tree(3 + i % 6, rng), b = random_tree(2 + (i * 5) % 7, rng);
    w_asym = std::max(w_asym, std::abs(wasserstein(a.joints, b.joints).distance -
                                       wasserstein(b.joints, a.joints).distance));
    const double gab = gromov_wasserstein(a, b).distance;
    gw_asym = std::max(gw_asym, std::abs(gab - gromov_wasserstein(b, a).distance));
    RigidTransform t;
    t.rotation = oracle::random_rotation(rng);
    t.translation = Vec3(0.3, -0.7, 0.2);
    gw_motion = std::max({gw_motion, std::abs(gromov_wasserstein(apply(t, a), b).distance - gab),
                          std::abs(gromov_wasserstein(a, apply(t, b)).distance - gab)});
  }
  for (int i = 0; i < 20; ++i) {
    const Skeleton a = random_tree(3, rng), b = random_tree(3, rng);
    const double brute = std::sqrt(oracle::gw_permutation_min(skeleton_geodesics(a), skeleton_geodesics(b)));
    const double got = gromov_wasserstein(a, b).distance;
    gw3 = std::max(gw3, brute > 0 ? std::abs(got - brute) / brute : got);
  }
  out.detail << "identity max " << worst_identity << ", W asym " << w_asym << ", GW asym " << gw_asym
             << ", GW motion " << gw_motion << ", GW n=3 rel " << gw3 << "; ";
  out.expect(worst_identity < 1e-2, "identity");
  out.expect(w_asym <= 1e-6, "W symmetry");
  out.expect(gw_asym <= 1e-6, "GW symmetry");
  out.expect(gw_motion <= 1e-2, "GW rigid invariance");
  out.expect(gw3 <= 0.05, "GW n=3 brute force");
}

// 10. Chamfer metrics barely move under corruptions that GW picks up.
void metric_separation(Outcome& out) {
  EvalSettings s;
  s.align = Alignment::None;
  int cases = 0, ok = 0;
  double worst_chamfer = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const Rig gt = i < 10 ? generate(SynthSpec{.family = Family::Quadruped, .seed = static_cast<std::uint64_t>(i)})
                          : generate(SynthSpec{.family = Family::Tree, .joint_count = 10 + i % 6,
                                               .seed = static_cast<std::uint64_t>(i)});
    const MetricReport clean = evaluate(gt, gt, s);
    for (Corruption kind : {Corruption::InsertMidBone, Corruption::DuplicateBranch}) {
      const Rig bad = corrupt(gt, kind, kind == Corruption::DuplicateBranch ? 0.01 : 0.0, 100 + i);
      const MetricReport r = evaluate(bad, gt, s);
      const double dc = std::max({std::abs(r.joint_to_joint - clean.joint_to_joint),
                                  std::abs(r.joint_to_bone - clean.joint_to_bone),
                                  std::abs(r.bone_to_bone - clean.bone_to_bone)});
      const double dg = r.gromov_wasserstein - clean.gromov_wasserstein;
      ++cases;
      const bool pass = dc < 0.01 && dg > 5.0 * dc;
      ok += pass;
      worst_chamfer = std::max(worst_chamfer, dc);
      worst_ratio = std::min(worst_ratio, dc > 0 ? dg / dc : std::numeric_limits<double>::infinity());
      if (!pass) out.detail << "rig " << i << " " << to_string(kind) << " chamfer " << dc << " gw " << dg << "; ";
    }
  }
  out.detail << ok << "/" << cases << " cases, worst chamfer delta " << worst_chamfer << ", smallest gw/chamfer "
             << worst_ratio << "; ";
  out.expect(ok == cases, "every case");
}

// 11. ICP recovery and aligned evaluation.
void icp_protocol(Outcome& out) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1100 + seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Points cloud;
    for (int i = 0; i < 30; ++i) cloud.emplace_back(u(rng), 0.6 * u(rng), 0.3 * u(rng));
    RigidTransform t;
    t.rotation = oracle::random_rotation(rng);
    t.translation = Vec3(u(rng), u(rng), u(rng));
    ok += align_icp(t.apply(cloud), cloud, IcpOptions{.restarts = 100, .seed = seed}).residual < 1e-6;
  }
  double worst = 0.0;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 4; ++i) {
    const Rig gt = generate(SynthSpec{.family = i % 2 ? Family::Quadruped : Family::Tree,
                                      .joint_count = 8 + i,
                                      .seed = static_cast<std::uint64_t>(40 + i)});
    RigidTransform t;
    t.rotation = oracle::random_rotation(rng);
    t.translation = Vec3(0.5, -1.0, 2.0);
    for (double v : metric_values(evaluate(apply(t, gt), gt))) worst = std::max(worst, v);
  }
  out.detail << "recovered " << ok << "/100, worst metric after alignment " << worst << "; ";
  out.expect(ok >= 99, "recovery rate");
  out.expect(worst < 1e-2, "aligned evaluation");
}

// 12. Pose sampler statistics.
void pose_sampler(Outcome& out) {
  Skeleton s;
  for (int i = 0; i < 10000; ++i) {
    s.joints.emplace_back(0.0001 * i, 0, 0);
    s.parents.push_back(i - 1);
  }
  const Pose p = perturb_pose(s, 0.8, 60.0, 12);
  int rotated = 0;
  double max_angle = 0.0;
  for (const auto& q : p.rotations) {
    const double angle = 2.0 * std::acos(std::min(1.0, std::abs(q.w()))) * 180.0 / M_PI;
    rotated += !q.isApprox(Eigen::Quaterniond::Identity(), 0.0) && angle > 0.0;
    max_angle = std::max(max_angle, angle);
  }
  const double fraction = rotated / 10000.0;
  const Pose again = perturb_pose(s, 0.8, 60.0, 12);
  bool identical = again.rotations.size() == p.rotations.size();
  for (std::size_t i = 0; identical && i < p.rotations.size(); ++i)
    identical = p.rotations[i].coeffs() == again.rotations[i].coeffs();
  out.detail << "fraction " << fraction << ", max angle " << max_angle << " deg; ";
  out.expect(fraction >= 0.78 && fraction <= 0.82, "fraction");
  out.expect(max_angle <= 60.0 + 1e-9, "angle bound");
  out.expect(identical && pose_to_json(p).dump() == pose_to_json(again).dump(), "reproducibility");
}

Eigen::Quaterniond about_z(double degrees) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(degrees * M_PI / 180.0, Vec3::UnitZ()));
}

// 13. Kinematics closed forms.
void kinematics(Outcome& out) {
  const Rig tree = generate(SynthSpec{.family = Family::Tree, .joint_count = 8, .seed = 13});
  const Pose id = Pose::identity(tree.skeleton.size());
  double err = 0.0;
  const Transforms w = forward_kinematics(tree.skeleton, id);
  for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, (w[i].translation() - tree.skeleton.joints[i]).norm());
  const Mesh rest = skin_mesh(tree, id);
  for (std::size_t v = 0; v < rest.vertices.size(); ++v) err = std::max(err, (rest.vertices[v] - tree.mesh.vertices[v]).norm());
  out.expect(err <= 1e-6, "identity");

  const Skeleton two = fixture::chain({Vec3(0, 0, 0), Vec3(1, 0, 0)});
  Pose p = Pose::identity(2);
  p.rotations[0] = about_z(90);
  out.expect((forward_kinematics(two, p)[1].translation() - Vec3(0, 1, 0)).norm() <= 1e-6, "single rotation");

  Rig half;
  half.mesh.vertices = {Vec3(2, 0, 0), Vec3(2, 0, 0)};
  half.skeleton = two;
  half.skin = SkinWeights{2, {{{1, 1.0}}, {{0, 0.5}, {1, 0.5}}}};
  p = Pose::identity(2);
  p.rotations[1] = about_z(180);
  const Mesh moved = skin_mesh(half, p);
  out.expect((moved.vertices[0] - Vec3(0, 0, 0)).norm() <= 1e-6 && (moved.vertices[1] - Vec3(1, 0, 0)).norm() <= 1e-6,
             "half-weight translation");

  std::mt19937_64 rng(13);
  double equiv = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Rig r = generate(SynthSpec{.family = Family::Tree, .joint_count = 5 + i, .seed = 60u + i});
    Pose pose = perturb_pose(r.skeleton, 0.8, 60.0, 70 + i);
    pose.root_translation = Vec3(0.1, -0.05, 0.2);
    const Eigen::Matrix3d rot = oracle::random_rotation(rng);
    const Eigen::Quaterniond q(rot);
    const Vec3 shift(0.3, -0.1, 0.7);
    Rig m = r;
    for (Vec3& v : m.mesh.vertices) v = rot * v + shift;
    for (Vec3& j : m.skeleton.joints) j = rot * j + shift;
    Pose pm = pose;
    for (auto& local : pm.rotations) local = q * local * q.conjugate();
    pm.root_translation = rot * pose.root_translation;
    const Mesh a = skin_mesh(r, pose), b = skin_mesh(m, pm);
    for (std::size_t v = 0; v < a.vertices.size(); ++v) equiv = std::max(equiv, (rot * a.vertices[v] + shift - b.vertices[v]).norm());
  }
  out.detail << "equivariance error " << equiv << "; ";
  out.expect(equiv <= 1e-6, "rigid-motion equivariance");
}

int run(const std::string& args) {
  const std::string cmd = std::string(RIGFIELD_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

// 14. Every subcommand writes identical files on a repeated run.
void cli_determinism(Outcome& out) {
  const fs::path base = fixture::scratch("determinism");
  fs::create_directories(base / "in" / "pred");
  fs::create_directories(base / "in" / "gt");
  const std::string in = (base / "in").string();
  bool setup = run("syngen --family tree --joints 7 --seed 5 --out " + in + "/rig.json") == 0 &&
               run("syngen --family chain --joints 4 --mesh sphere --seed 6 --out " + in + "/other.json") == 0 &&
               run("syngen --family tree --joints 7 --seed 5 --out " + in + "/gt/a.json") == 0 &&
               run("syngen --family tree --joints 7 --seed 5 --corrupt insert-mid-bone --out " + in + "/pred/a.json") == 0 &&
               run("encode-field --input " + in + "/rig.json --out " + in + "/field.json") == 0;
  out.expect(setup, "setup");
  if (!setup) return;

  const std::vector<std::string> commands = {
      "syngen --family quadruped --seed 3 --corrupt duplicate-branch --magnitude 0.01 --out @/rig.json",
      "voxelize --input " + in + "/rig.json --resolution 32 --out-dir @",
      "encode-field --input " + in + "/rig.json --out @/field.json",
      "decode-skeleton --input " + in + "/field.json --out @/skeleton.json",
      "roundtrip --input " + in + "/rig.json --noise 0.25 --trials 3 --seed 2 --out-dir @",
      "transfer-skin --source " + in + "/rig.json --target " + in + "/other.json --out @/bvh.json",
      "transfer-skin --source " + in + "/rig.json --target " + in + "/other.json --method nn --out @/nn.json",
      "perturb --input " + in + "/rig.json --seed 8 --out-rig @/posed.json --out-pose @/pose.json",
      "eval --pred " + in + "/pred --gt " + in + "/gt --icp-restarts 20 --seed 1 --out @/report.json --table @/table.txt",
      "fit-skin --input " + in + "/rig.json --iterations 200 --seed 3 --out @/emb.json",
  };
  int index = 0;
  for (const std::string& c : commands) {
    std::vector<std::map<std::string, std::string>> runs;
    bool ran = true;
    for (const char* tag : {"a", "b"}) {
      const fs::path dir = base / (std::to_string(index) + tag);
      fs::remove_all(dir);
      fs::create_directories(dir);
      std::string cmd = c;
      for (auto pos = cmd.find('@'); pos != std::string::npos; pos = cmd.find('@')) cmd.replace(pos, 1, dir.string());
      ran = ran && run(cmd) == 0;
      runs.push_back(snapshot(dir));
    }
    const std::string name = c.substr(0, c.find(' '));
    out.expect(ran, name + " exit status");
    out.expect(!runs[0].empty() && runs[0] == runs[1], name + " output differs");
    ++index;
  }
  out.detail << commands.size() << " invocations compared; ";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"skeleton field round trip", round_trip},
      {"confidence correctness", confidence},
      {"clustering conformance", clustering},
      {"bvh oracle equivalence and speed", bvh_queries},
      {"skin transfer fidelity", transfer_fidelity},
      {"partition of unity", partition_of_unity},
      {"skin embedding fit", skin_fit},
      {"sinkhorn oracle", sinkhorn_oracle},
      {"metric axioms", metric_axioms},
      {"metric separation", metric_separation},
      {"icp protocol", icp_protocol},
      {"pose augmentation statistics", pose_sampler},
      {"kinematics", kinematics},
      {"cli determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::printf("%s %2zu %s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures;
}
