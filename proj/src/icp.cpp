#include "rigfield/icp.hpp"

#include <Eigen/SVD>
#include <limits>

#include "rigfield/error.hpp"

namespace rigfield {

Points RigidTransform::apply(const Points& pts) const {
  Points out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(apply(p));
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& first) const {
  RigidTransform out;
  out.rotation = rotation * first.rotation;
  out.translation = rotation * first.translation + translation;
  return out;
}

Skeleton apply(const RigidTransform& t, const Skeleton& skeleton) {
  Skeleton out = skeleton;
  out.joints = t.apply(skeleton.joints);
  return out;
}

Rig apply(const RigidTransform& t, const Rig& rig) {
  Rig out = rig;
  out.mesh.vertices = t.apply(rig.mesh.vertices);
  out.skeleton.joints = t.apply(rig.skeleton.joints);
  return out;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q.coeffs() << n(rng), n(rng), n(rng), n(rng);
  } while (q.norm() < 1e-12);
  return q.normalized().toRotationMatrix();
}

namespace {

Vec3 centroid(const Points& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

RigidTransform fit_rigid(const Points& src, const Points& dst) {
  require(src.size() == dst.size() && !src.empty(), "rigid fit needs paired, non-empty point sets");
  const Vec3 cs = centroid(src), cd = centroid(dst);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

namespace {

std::size_t nearest(const Vec3& p, const Points& dst) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const double d = (p - dst[k]).squaredNorm();
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

double mean_squared_nn(const Points& src, const Points& dst, const RigidTransform& t) {
  double sum = 0.0;
  for (const Vec3& p : src) {
    const Vec3 q = t.apply(p);
    sum += (q - dst[nearest(q, dst)]).squaredNorm();
  }
  return sum / static_cast<double>(src.size());
}

IcpResult align_icp(const Points& pred, const Points& gt, const IcpOptions& options) {
  require(pred.size() >= 3 && gt.size() >= 3, "ICP needs at least 3 points on each side");
  require(options.restarts >= 1, "ICP needs at least one restart");
  require(options.iterations >= 1, "ICP needs at least one iteration");

  std::mt19937_64 rng(options.seed);
  const Vec3 cp = centroid(pred), cg = centroid(gt);
  IcpResult best;
  best.residual = std::numeric_limits<double>::infinity();
  Points matched(pred.size());

  for (int r = 0; r < options.restarts; ++r) {
    RigidTransform t;
    t.rotation = r == 0 ? Eigen::Matrix3d::Identity() : random_rotation(rng);
    t.translation = cg - t.rotation * cp;
    double err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.iterations; ++it) {
      double sum = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const Vec3 q = t.apply(pred[i]);
        matched[i] = gt[nearest(q, gt)];
        sum += (q - matched[i]).squaredNorm();
      }
      const double cur = sum / static_cast<double>(pred.size());
      if (cur >= err - 1e-15 * std::max(1.0, err)) break;
      err = cur;
      t = fit_rigid(pred, matched);
    }
    const double residual = mean_squared_nn(pred, gt, t);
    if (residual < best.residual) {
      best.residual = residual;
      best.transform = t;
      best.best_restart = r;
    }
  }
  return best;
}

}  // namespace rigfield
