#include "rigfield/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "rigfield/error.hpp"

namespace rigfield {

SparseVoxelGrid::SparseVoxelGrid(int resolution, std::vector<Voxel> voxels)
    : resolution_(resolution), voxels_(std::move(voxels)) {
  require(resolution_ >= 1, "grid resolution must be positive");
  for (const Voxel& v : voxels_)
    for (int c : v) require(c >= 0 && c < resolution_, "voxel coordinate outside the grid");
  std::sort(voxels_.begin(), voxels_.end());
  voxels_.erase(std::unique(voxels_.begin(), voxels_.end()), voxels_.end());
}

bool SparseVoxelGrid::contains(const Voxel& v) const { return std::binary_search(voxels_.begin(), voxels_.end(), v); }

Vec3 SparseVoxelGrid::center(const Voxel& v) const {
  const double e = edge();
  return {-0.5 + (v[0] + 0.5) * e, -0.5 + (v[1] + 0.5) * e, -0.5 + (v[2] + 0.5) * e};
}

Voxel SparseVoxelGrid::voxel_of(const Vec3& p) const {
  Voxel v;
  for (int a = 0; a < 3; ++a) {
    const double g = std::floor((p[a] + 0.5) * resolution_);
    v[a] = static_cast<int>(std::clamp(g, 0.0, static_cast<double>(resolution_ - 1)));
  }
  return v;
}

namespace {

using VoxelSet = std::unordered_set<long long>;

long long key(const Voxel& v, int n) { return (static_cast<long long>(v[0]) * n + v[1]) * n + v[2]; }

Voxel unkey(long long k, int n) {
  const int z = static_cast<int>(k % n);
  k /= n;
  return {static_cast<int>(k / n), static_cast<int>(k % n), z};
}

SparseVoxelGrid from_set(int n, const VoxelSet& set) {
  std::vector<Voxel> voxels;
  voxels.reserve(set.size());
  for (long long k : set) voxels.push_back(unkey(k, n));
  return SparseVoxelGrid(n, std::move(voxels));
}

Vec3 to_grid(const Vec3& p, int n) { return (p.array() + 0.5).matrix() * n; }

bool axis_separates(const Vec3& axis, const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& h) {
  const double p0 = axis.dot(v0), p1 = axis.dot(v1), p2 = axis.dot(v2);
  const double r = h.dot(axis.cwiseAbs());
  return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

}  // namespace

bool triangle_box_overlap(const Vec3& box_center, const Vec3& half_size, const Vec3& a, const Vec3& b,
                          const Vec3& c) {
  const Vec3 v0 = a - box_center, v1 = b - box_center, v2 = c - box_center;
  const Vec3 edges[3] = {v1 - v0, v2 - v1, v0 - v2};

  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::min({v0[axis], v1[axis], v2[axis]});
    const double hi = std::max({v0[axis], v1[axis], v2[axis]});
    if (lo > half_size[axis] || hi < -half_size[axis]) return false;
  }

  const Vec3 normal = edges[0].cross(edges[1]);
  if (std::abs(normal.dot(v0)) > half_size.dot(normal.cwiseAbs())) return false;

  for (const Vec3& e : edges)
    for (int axis = 0; axis < 3; ++axis)
      if (axis_separates(Vec3::Unit(axis).cross(e), v0, v1, v2, half_size)) return false;
  return true;
}

SparseVoxelGrid rasterize_surface(const Mesh& mesh, int resolution) {
  require(resolution >= 1, "resolution must be positive");
  require(!mesh.triangles.empty(), "cannot voxelize a mesh without triangles");
  validate(mesh);

  const int n = resolution;
  const Vec3 half = Vec3::Constant(0.5);
  VoxelSet occupied;
  for (const Triangle& t : mesh.triangles) {
    const Vec3 a = to_grid(mesh.vertices[t[0]], n);
    const Vec3 b = to_grid(mesh.vertices[t[1]], n);
    const Vec3 c = to_grid(mesh.vertices[t[2]], n);
    int lo[3], hi[3];
    for (int axis = 0; axis < 3; ++axis) {
      // A triangle touching the lower face of cell k also touches cell k - 1.
      const double mn = std::min({a[axis], b[axis], c[axis]});
      const double mx = std::max({a[axis], b[axis], c[axis]});
      lo[axis] = std::clamp(static_cast<int>(std::ceil(mn)) - 1, 0, n - 1);
      hi[axis] = std::clamp(static_cast<int>(std::floor(mx)), 0, n - 1);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z) {
          const Vec3 center(x + 0.5, y + 0.5, z + 0.5);
          if (triangle_box_overlap(center, half, a, b, c)) occupied.insert(key({x, y, z}, n));
        }
  }
  return from_set(n, occupied);
}

SparseVoxelGrid voxelize_surface(const Mesh& mesh, int resolution) {
  require(resolution >= 8, "surface resolution must be at least 8, got " + std::to_string(resolution));
  require(!mesh.triangles.empty(), "cannot voxelize a mesh without triangles");
  for (const Vec3& v : mesh.vertices)
    require(v.cwiseAbs().maxCoeff() <= 0.5 + 1e-6, "mesh is not normalized to the unit cube");
  return rasterize_surface(mesh, resolution);
}

std::vector<Voxel> traverse_segment(const Vec3& from, const Vec3& to, int resolution) {
  const int n = resolution;
  const double top = std::nextafter(static_cast<double>(n), 0.0);
  const Vec3 g0 = to_grid(from, n).cwiseMax(0.0).cwiseMin(top);
  const Vec3 g1 = to_grid(to, n).cwiseMax(0.0).cwiseMin(top);

  Voxel cur, end;
  int step[3];
  double t_max[3], t_delta[3];
  const Vec3 dir = g1 - g0;
  for (int a = 0; a < 3; ++a) {
    cur[a] = static_cast<int>(std::floor(g0[a]));
    end[a] = static_cast<int>(std::floor(g1[a]));
    if (dir[a] > 0) {
      step[a] = 1;
      t_delta[a] = 1.0 / dir[a];
      t_max[a] = (cur[a] + 1 - g0[a]) / dir[a];
    } else if (dir[a] < 0) {
      step[a] = -1;
      t_delta[a] = -1.0 / dir[a];
      t_max[a] = (cur[a] - g0[a]) / dir[a];
    } else {
      step[a] = 0;
      t_delta[a] = t_max[a] = std::numeric_limits<double>::infinity();
    }
  }

  std::vector<Voxel> out{cur};
  const int budget = std::abs(end[0] - cur[0]) + std::abs(end[1] - cur[1]) + std::abs(end[2] - cur[2]);
  for (int i = 0; i < budget && cur != end; ++i) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    // Never step past the end cell on an axis that is already done.
    if (cur[axis] == end[axis]) {
      int best = -1;
      for (int a = 0; a < 3; ++a)
        if (cur[a] != end[a] && (best < 0 || t_max[a] < t_max[best])) best = a;
      axis = best;
    }
    cur[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    out.push_back(cur);
  }
  if (out.back() != end) out.push_back(end);
  return out;
}

SparseVoxelGrid voxelize_skeleton(const Skeleton& skeleton, int resolution, int dilation) {
  require(resolution >= 1, "resolution must be positive");
  require(dilation >= 0, "dilation must be non-negative");
  require(!skeleton.joints.empty(), "cannot voxelize an empty skeleton");
  validate(skeleton);
  for (const Vec3& j : skeleton.joints)
    require(j.cwiseAbs().maxCoeff() <= 0.5 + 1e-6, "skeleton joint outside the unit cube");

  VoxelSet occupied;
  const SparseVoxelGrid frame(resolution, {});
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    const int p = skeleton.parents[i];
    if (p < 0) {
      occupied.insert(key(frame.voxel_of(skeleton.joints[i]), resolution));
      continue;
    }
    for (const Voxel& v : traverse_segment(skeleton.joints[i], skeleton.joints[p], resolution))
      occupied.insert(key(v, resolution));
  }
  return dilate(from_set(resolution, occupied), dilation);
}

SparseVoxelGrid dilate(const SparseVoxelGrid& grid, int radius) {
  require(radius >= 0, "dilation radius must be non-negative");
  if (radius == 0) return grid;
  const int n = grid.resolution();
  VoxelSet out;
  for (const Voxel& v : grid.voxels())
    for (int x = std::max(0, v[0] - radius); x <= std::min(n - 1, v[0] + radius); ++x)
      for (int y = std::max(0, v[1] - radius); y <= std::min(n - 1, v[1] + radius); ++y)
        for (int z = std::max(0, v[2] - radius); z <= std::min(n - 1, v[2] + radius); ++z)
          out.insert(key({x, y, z}, n));
  return from_set(n, out);
}

Json grid_to_json(const SparseVoxelGrid& grid) {
  Json occupied = Json::array();
  for (const Voxel& v : grid.voxels()) occupied.push_back({v[0], v[1], v[2]});
  return {{"resolution", grid.resolution()}, {"occupied", std::move(occupied)}};
}

SparseVoxelGrid grid_from_json(const Json& doc) {
  require(doc.is_object() && doc.contains("resolution") && doc.contains("occupied"),
          "voxel grid needs \"resolution\" and \"occupied\"");
  require(doc["resolution"].is_number_integer(), "grid resolution is not an integer");
  std::vector<Voxel> voxels;
  for (const Json& v : doc["occupied"]) {
    require(v.is_array() && v.size() == 3, "voxel is not an integer triple");
    for (const Json& c : v) require(c.is_number_integer(), "voxel coordinate is not an integer");
    voxels.push_back({v[0].get<int>(), v[1].get<int>(), v[2].get<int>()});
  }
  return SparseVoxelGrid(doc["resolution"].get<int>(), std::move(voxels));
}

}  // namespace rigfield
