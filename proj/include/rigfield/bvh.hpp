#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rigfield/rig.hpp"

namespace rigfield {

struct SurfaceHit {
  int triangle = -1;
  Vec3 point = Vec3::Zero();
  Vec3 barycentric = Vec3::Zero();  // weights of the triangle's three vertices
  double squared_distance = std::numeric_limits<double>::infinity();
  double distance = std::numeric_limits<double>::infinity();
};

struct TrianglePoint {
  Vec3 point;
  Vec3 barycentric;
};

/// Exact closest point on triangle abc (region classification). Degenerate
/// triangles fall back to their edges.
TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Linear scan over every triangle; ties go to the lowest triangle index.
SurfaceHit closest_point_brute_force(const Mesh& mesh, const Vec3& query);

/// FNV-1a over the mesh's coordinates and indices, used to pair cache files
/// with their source mesh.
std::uint64_t mesh_hash(const Mesh& mesh);

/// Median-split bounding volume hierarchy over a mesh's triangles. Immutable
/// after construction, so concurrent queries are safe.
class TriangleBvh {
 public:
  struct Node {
    Aabb box;
    std::int32_t left = -1;  // child node indices, -1 for leaves
    std::int32_t right = -1;
    std::uint32_t first = 0;  // leaf range into triangle_order()
    std::uint32_t count = 0;

    bool leaf() const { return count > 0; }
  };

  static TriangleBvh build(const Mesh& mesh, int max_leaf_size = 1);

  SurfaceHit closest_point(const Vec3& query) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& triangle_order() const { return order_; }
  const Mesh& mesh() const { return *mesh_; }

  /// Binary cache: "RBVH", u32 version, u64 mesh hash, u32 node count, packed
  /// nodes, u32 triangle count, triangle permutation. Little-endian.
  std::string serialize() const;
  static TriangleBvh deserialize(const std::string& bytes, const Mesh& mesh);
  void save(const std::filesystem::path& path) const;
  static TriangleBvh load(const std::filesystem::path& path, const Mesh& mesh);

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

/// Weights at a surface point: barycentric blend of the triangle corners'
/// sparse weights, renormalized.
std::vector<Influence> blend_influences(const SkinWeights& skin, const Triangle& tri, const Vec3& barycentric);

/// Per destination vertex, interpolate the source skin at the closest point on
/// the source surface.
SkinWeights transfer_skin_bvh(const Rig& src, const Mesh& dst);
SkinWeights transfer_skin_bvh(const TriangleBvh& bvh, const SkinWeights& src_skin, const Mesh& dst);

/// Per destination vertex, copy the weights of the nearest source vertex.
SkinWeights transfer_skin_nn(const Rig& src, const Mesh& dst);

}  // namespace rigfield
