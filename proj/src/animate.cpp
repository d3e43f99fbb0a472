#include "rigfield/animate.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "rigfield/error.hpp"

namespace rigfield {

Pose Pose::identity(std::size_t joint_count) {
  return {std::vector<Eigen::Quaterniond>(joint_count, Eigen::Quaterniond::Identity()), Vec3::Zero()};
}

bool Pose::is_identity() const {
  if (!root_translation.isZero(0.0)) return false;
  for (const Eigen::Quaterniond& q : rotations)
    if (!(q.w() == 1.0 && q.vec().isZero(0.0))) return false;
  return true;
}

void validate(const Pose& pose, std::size_t joint_count) {
  require(pose.rotations.size() == joint_count, "pose has " + std::to_string(pose.rotations.size()) +
                                                    " rotations for " + std::to_string(joint_count) + " joints");
  for (const Eigen::Quaterniond& q : pose.rotations)
    require(std::abs(q.norm() - 1.0) <= 1e-9, "pose rotation is not a unit quaternion");
  require(pose.root_translation.allFinite(), "pose root translation is not finite");
}

namespace {

// Joints ordered so every parent precedes its children.
std::vector<int> topological_order(const Skeleton& skeleton) {
  const auto children = children_of(skeleton);
  std::vector<int> order;
  order.reserve(skeleton.size());
  for (std::size_t i = 0; i < skeleton.size(); ++i)
    if (skeleton.is_root(i)) order.push_back(static_cast<int>(i));
  for (std::size_t k = 0; k < order.size(); ++k)
    for (int c : children[order[k]]) order.push_back(c);
  return order;
}

}  // namespace

Transforms forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  validate(skeleton);
  validate(pose, skeleton.size());
  Transforms world(skeleton.size(), Eigen::Isometry3d::Identity());
  if (pose.is_identity()) {
    for (std::size_t i = 0; i < world.size(); ++i) world[i].translation() = skeleton.joints[i];
    return world;
  }
  for (int i : topological_order(skeleton)) {
    const int p = skeleton.parents[i];
    Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
    if (p < 0) {
      local.translation() = skeleton.joints[i] + pose.root_translation;
    } else {
      local.translation() = skeleton.joints[i] - skeleton.joints[p];
    }
    local.linear() = pose.rotations[i].toRotationMatrix();
    world[i] = p < 0 ? local : world[p] * local;
  }
  return world;
}

Transforms skinning_transforms(const Skeleton& skeleton, const Pose& pose) {
  Transforms out = forward_kinematics(skeleton, pose);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * Eigen::Translation3d(-skeleton.joints[i]);
  return out;
}

Mesh skin_mesh(const Rig& rig, const Pose& pose) {
  require(rig.skin.has_value(), "rig has no skin to deform with");
  validate(pose, rig.skeleton.size());
  if (pose.is_identity()) return rig.mesh;

  const Transforms m = skinning_transforms(rig.skeleton, pose);
  Mesh out = rig.mesh;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) {
    Vec3 blended = Vec3::Zero();
    for (const Influence& inf : rig.skin->entries[v]) blended += inf.weight * (m[inf.joint] * rig.mesh.vertices[v]);
    out.vertices[v] = blended;
  }
  return out;
}

Skeleton pose_skeleton(const Skeleton& skeleton, const Pose& pose) {
  const Transforms world = forward_kinematics(skeleton, pose);
  Skeleton out = skeleton;
  for (std::size_t i = 0; i < out.size(); ++i) out.joints[i] = world[i].translation();
  return out;
}

Pose perturb_pose(const Skeleton& skeleton, double probability, double max_degrees, std::uint64_t seed) {
  require(probability >= 0.0 && probability <= 1.0, "perturbation probability must lie in [0, 1]");
  require(max_degrees >= 0.0 && std::isfinite(max_degrees), "maximum perturbation angle must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double max_radians = max_degrees * std::numbers::pi / 180.0;

  Pose pose = Pose::identity(skeleton.size());
  for (Eigen::Quaterniond& q : pose.rotations) {
    // Draw every variate so a joint's sample does not depend on earlier outcomes.
    const double coin = unit(rng);
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    const double angle = unit(rng) * max_radians;
    if (coin >= probability || angle == 0.0) continue;
    const double len = axis.norm();
    axis = len > 0.0 ? Vec3(axis / len) : Vec3::UnitZ();
    q = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
  }
  return pose;
}

Json pose_to_json(const Pose& pose) {
  Json rotations = Json::array();
  for (const Eigen::Quaterniond& q : pose.rotations)
    rotations.push_back({round_sig9(q.x()), round_sig9(q.y()), round_sig9(q.z()), round_sig9(q.w())});
  return {{"rotations", std::move(rotations)}, {"root_translation", to_json(pose.root_translation)}};
}

Pose pose_from_json(const Json& doc) {
  require(doc.is_object() && doc.contains("rotations"), "pose needs \"rotations\"");
  Pose pose;
  for (const Json& r : doc["rotations"]) {
    require(r.is_array() && r.size() == 4, "rotation is not [qx, qy, qz, qw]");
    for (const Json& c : r) require(c.is_number(), "rotation component is not a number");
    Eigen::Quaterniond q(r[3].get<double>(), r[0].get<double>(), r[1].get<double>(), r[2].get<double>());
    // Files carry 9 significant digits; restore exact unit length.
    require(std::abs(q.norm() - 1.0) <= 1e-6, "rotation is not a unit quaternion");
    q.normalize();
    pose.rotations.push_back(q);
  }
  if (doc.contains("root_translation")) pose.root_translation = vec3_from_json(doc["root_translation"]);
  return pose;
}

}  // namespace rigfield
