#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rigfield {

using Vec3 = Eigen::Vector3d;
using Points = std::vector<Vec3>;
using Triangle = std::array<int, 3>;

/// Triangle soup in world coordinates. Unit-cube normalized meshes live in
/// [-0.5, 0.5]^3.
struct Mesh {
  Points vertices;
  std::vector<Triangle> triangles;
};

/// Joint positions plus parent indices (-1 for roots). The parent links form a
/// forest.
struct Skeleton {
  Points joints;
  std::vector<int> parents;

  std::size_t size() const { return joints.size(); }
  bool is_root(std::size_t i) const { return parents[i] < 0; }
};

struct Influence {
  int joint = 0;
  double weight = 0.0;

  friend bool operator==(const Influence&, const Influence&) = default;
};

/// Sparse per-vertex skinning weights, one influence list per vertex.
struct SkinWeights {
  int joint_count = 0;
  std::vector<std::vector<Influence>> entries;

  std::size_t vertex_count() const { return entries.size(); }
  /// Dense copy of one vertex's weights (length joint_count).
  Eigen::VectorXd dense(std::size_t vertex) const;
  Eigen::MatrixXd dense() const;  // vertex_count x joint_count
};

struct Rig {
  Mesh mesh;
  Skeleton skeleton;
  std::optional<SkinWeights> skin;
};

// Validation throws Error(Validation) naming the first violated invariant.
void validate(const Mesh& mesh);
void validate(const Skeleton& skeleton);
void validate(const SkinWeights& skin, double sum_tolerance = 1e-6);
void validate(const Rig& rig);

/// True when following parent links from every joint reaches a root.
bool is_forest(std::span<const int> parents);

/// Children lists derived from parent indices.
std::vector<std::vector<int>> children_of(const Skeleton& skeleton);

/// Rescale each vertex's weights to sum to one. Entries whose sum is off by more
/// than `tolerance` are rejected.
void renormalize(SkinWeights& skin, double tolerance);

struct Normalization {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();  // applied before scaling: x' = scale * (x + offset)

  Vec3 apply(const Vec3& p) const { return scale * (p + offset); }
  Vec3 invert(const Vec3& p) const { return p / scale - offset; }
};

struct NormalizedRig {
  Rig rig;
  Normalization transform;
};

/// Centers the mesh bounding box at the origin and scales its largest extent to
/// 1. Joints follow the same similarity transform.
NormalizedRig normalize_rig(const Rig& rig);

void apply(const Normalization& t, Rig& rig);

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool empty() const { return (lo.array() > hi.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  /// Squared distance from p to the box, zero inside.
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

Aabb bounds(std::span<const Vec3> points);

}  // namespace rigfield
