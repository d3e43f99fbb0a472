#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Geometry>

#include "rigfield/rig_io.hpp"

namespace rigfield {

/// Per-joint local rotations relative to the rest pose, plus a translation
/// applied to every root.
struct Pose {
  std::vector<Eigen::Quaterniond> rotations;
  Vec3 root_translation = Vec3::Zero();

  static Pose identity(std::size_t joint_count);
  bool is_identity() const;
};

void validate(const Pose& pose, std::size_t joint_count);

using Transforms = std::vector<Eigen::Isometry3d>;

/// World transform of each joint frame. A joint frame sits at the joint's
/// posed position and carries the accumulated rotation, so the identity pose
/// maps each frame origin to the rest joint.
Transforms forward_kinematics(const Skeleton& skeleton, const Pose& pose);

/// Rest-to-posed transform per joint (world frame), the matrices linear blend
/// skinning applies.
Transforms skinning_transforms(const Skeleton& skeleton, const Pose& pose);

/// Linear blend skinning. The identity pose returns the mesh unchanged.
Mesh skin_mesh(const Rig& rig, const Pose& pose);

/// Posed skeleton joints (positions from forward kinematics, same parents).
Skeleton pose_skeleton(const Skeleton& skeleton, const Pose& pose);

inline constexpr double kDefaultPerturbProbability = 0.8;
inline constexpr double kDefaultPerturbMaxDegrees = 60.0;

/// Each joint independently, with probability `probability`, is rotated about
/// a uniformly random axis by an angle uniform in [0, max_degrees].
Pose perturb_pose(const Skeleton& skeleton, double probability = kDefaultPerturbProbability,
                  double max_degrees = kDefaultPerturbMaxDegrees, std::uint64_t seed = 0);

Json pose_to_json(const Pose& pose);
Pose pose_from_json(const Json& doc);

}  // namespace rigfield
