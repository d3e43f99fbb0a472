#pragma once

#include <filesystem>
#include <vector>

#include "rigfield/rig_io.hpp"
#include "rigfield/voxel_grid.hpp"

namespace rigfield {

inline constexpr int kDefaultSkeletonResolution = 64;
inline constexpr int kDefaultSkeletonDilation = 2;

/// Conservative triangle/box overlap (separating axis test). Touching counts
/// as overlapping.
bool triangle_box_overlap(const Vec3& box_center, const Vec3& half_size, const Vec3& a, const Vec3& b,
                          const Vec3& c);

/// Voxels overlapped by any triangle of a unit-cube mesh. Requires
/// resolution >= 8 and all vertices within 1e-6 of the cube.
SparseVoxelGrid voxelize_surface(const Mesh& mesh, int resolution);

/// Same rasterization with no lower bound on the resolution.
SparseVoxelGrid rasterize_surface(const Mesh& mesh, int resolution);

/// Voxels whose cells a segment passes through, in traversal order (3D DDA).
std::vector<Voxel> traverse_segment(const Vec3& from, const Vec3& to, int resolution);

/// Bone voxels (joint to parent segments, roots contribute their own voxel)
/// dilated by an L-infinity radius.
SparseVoxelGrid voxelize_skeleton(const Skeleton& skeleton, int resolution = kDefaultSkeletonResolution,
                                  int dilation = kDefaultSkeletonDilation);

/// Minkowski sum with the L-infinity ball of the given radius, clipped to the
/// grid.
SparseVoxelGrid dilate(const SparseVoxelGrid& grid, int radius);

Json grid_to_json(const SparseVoxelGrid& grid);
SparseVoxelGrid grid_from_json(const Json& doc);

}  // namespace rigfield
