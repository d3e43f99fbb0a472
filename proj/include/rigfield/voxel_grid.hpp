#pragma once

#include <array>
#include <vector>

#include "rigfield/rig.hpp"

namespace rigfield {

using Voxel = std::array<int, 3>;

/// Set of occupied voxels in an N^3 grid spanning the cube [-0.5, 0.5]^3.
/// Voxels are kept sorted lexicographically and unique.
class SparseVoxelGrid {
 public:
  SparseVoxelGrid() = default;
  SparseVoxelGrid(int resolution, std::vector<Voxel> voxels);

  int resolution() const { return resolution_; }
  double edge() const { return 1.0 / resolution_; }
  const std::vector<Voxel>& voxels() const { return voxels_; }
  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }
  bool contains(const Voxel& v) const;

  Vec3 center(const Voxel& v) const;
  /// Voxel containing p, clamped to the grid.
  Voxel voxel_of(const Vec3& p) const;

  friend bool operator==(const SparseVoxelGrid&, const SparseVoxelGrid&) = default;

 private:
  int resolution_ = 0;
  std::vector<Voxel> voxels_;
};

}  // namespace rigfield
