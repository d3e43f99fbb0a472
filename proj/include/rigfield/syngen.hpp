#pragma once

#include <cstdint>
#include <string>

#include "rigfield/rig.hpp"

namespace rigfield {

enum class Family { Chain, Star, Tree, Quadruped };
enum class MeshStyle { Capsule, Sphere };
enum class Corruption { InsertMidBone, DuplicateBranch, DeleteBranch, JitterJoints };

Family family_from_string(const std::string& name);
MeshStyle mesh_style_from_string(const std::string& name);
Corruption corruption_from_string(const std::string& name);
std::string to_string(Family family);
std::string to_string(MeshStyle style);
std::string to_string(Corruption kind);

inline constexpr double kDefaultSkinFalloff = 0.05;

struct SynthSpec {
  Family family = Family::Chain;
  int joint_count = 5;     // total joints; quadrupeds use a fixed 17-joint template
  int root_count = 1;      // number of trees in the forest
  double bone_min = 0.12;  // bone length range before normalization
  double bone_max = 0.25;
  double min_separation = 0.0;  // minimum distance between any two joints
  MeshStyle mesh = MeshStyle::Capsule;
  double radius = 0.03;  // capsule / sphere radius
  int segments = 12;     // tessellation around each capsule axis
  double falloff = kDefaultSkinFalloff;
  bool skin = true;
  bool normalize = true;  // map the result into the unit cube
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

/// Deterministic synthetic rig. Joints are placed inside [-0.4, 0.4]^3; the mesh
/// is a union of capsules (or spheres) and the skin is the closed-form softmax
/// falloff evaluated after normalization.
Rig generate(const SynthSpec& spec);

/// Closed-form skin at p: softmax over joints of -dist(p, region_j) / falloff,
/// where region_j is the union of bones from joint j to its children (the joint
/// itself for a leaf).
Eigen::VectorXd analytic_skin_at(const Skeleton& skeleton, const Vec3& p, double falloff = kDefaultSkinFalloff);
SkinWeights analytic_skin(const Skeleton& skeleton, const Points& vertices, double falloff = kDefaultSkinFalloff);

/// Closed capsule around [a, b]; b == a gives a sphere.
Mesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments);
/// Latitude-longitude sphere; vertices crowd towards the poles.
Mesh make_uv_sphere(const Vec3& center, double radius, int rings, int segments);
/// Subdivided icosahedron with near-uniform vertex spacing.
Mesh make_icosphere(const Vec3& center, double radius, int subdivisions);

void append(Mesh& dst, const Mesh& src);

/// Corrupted copy of a rig with skin remapped:
///  insert-mid-bone   adds a joint at the midpoint of a random bone;
///  duplicate-branch  copies a random non-root subtree shifted by `magnitude`,
///                    with no skin influence;
///  delete-branch     removes a random non-root subtree, moving its weights to
///                    the attachment joint;
///  jitter-joints     adds Gaussian noise of standard deviation `magnitude`.
Rig corrupt(const Rig& rig, Corruption kind, double magnitude, std::uint64_t seed);

}  // namespace rigfield
