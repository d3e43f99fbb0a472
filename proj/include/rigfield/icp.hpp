#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rigfield/rig.hpp"

namespace rigfield {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Points apply(const Points& pts) const;
  RigidTransform inverse() const;
  /// (*this) after `first`.
  RigidTransform compose(const RigidTransform& first) const;
  static RigidTransform identity() { return {}; }
};

Rig apply(const RigidTransform& t, const Rig& rig);
Skeleton apply(const RigidTransform& t, const Skeleton& skeleton);

/// Uniformly distributed rotation.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

/// Least-squares rigid fit mapping src[i] onto dst[i] (Kabsch).
RigidTransform fit_rigid(const Points& src, const Points& dst);

/// Mean squared distance from each transformed source point to its nearest target point.
double mean_squared_nn(const Points& src, const Points& dst, const RigidTransform& t);

inline constexpr int kDefaultIcpRestarts = 100;

struct IcpOptions {
  int restarts = kDefaultIcpRestarts;
  int iterations = 50;
  std::uint64_t seed = 0;
};

struct IcpResult {
  RigidTransform transform;  // maps pred onto gt
  double residual = 0.0;     // mean squared nearest-neighbour distance after alignment
  int best_restart = 0;
};

/// Best-of-restarts rigid ICP. Restart 0 starts from the identity rotation, the
/// others from random rotations; every start first matches centroids.
IcpResult align_icp(const Points& pred, const Points& gt, const IcpOptions& options = {});

}  // namespace rigfield
