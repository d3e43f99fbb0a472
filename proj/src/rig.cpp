#include "rigfield/rig.hpp"

#include <cmath>
#include <string>

#include "rigfield/error.hpp"

namespace rigfield {

Eigen::VectorXd SkinWeights::dense(std::size_t vertex) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(joint_count);
  for (const Influence& inf : entries[vertex]) w[inf.joint] += inf.weight;
  return w;
}

Eigen::MatrixXd SkinWeights::dense() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()), joint_count);
  for (std::size_t v = 0; v < entries.size(); ++v)
    for (const Influence& inf : entries[v]) w(static_cast<Eigen::Index>(v), inf.joint) += inf.weight;
  return w;
}

namespace {

bool finite(const Vec3& p) { return p.allFinite(); }

}  // namespace

void validate(const Mesh& mesh) {
  const auto n = static_cast<int>(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    require(finite(mesh.vertices[v]), "mesh vertex " + std::to_string(v) + " is not finite");
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    for (int idx : tri)
      require(idx >= 0 && idx < n, "triangle " + std::to_string(t) + " has bad vertex index " +
                                       std::to_string(idx));
    require(!(tri[0] == tri[1] && tri[1] == tri[2]),
            "triangle " + std::to_string(t) + " is degenerate");
  }
}

bool is_forest(std::span<const int> parents) {
  const std::size_t n = parents.size();
  // 0 = unvisited, 1 = on current path, 2 = known to reach a root
  std::vector<char> state(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (true) {
      if (state[cur] == 2) break;
      if (state[cur] == 1) return false;
      state[cur] = 1;
      path.push_back(cur);
      const int p = parents[cur];
      if (p < 0) break;
      cur = static_cast<std::size_t>(p);
    }
    for (std::size_t i : path) state[i] = 2;
  }
  return true;
}

void validate(const Skeleton& skeleton) {
  require(skeleton.parents.size() == skeleton.joints.size(),
          "skeleton parents length differs from joint count");
  const auto n = static_cast<int>(skeleton.joints.size());
  for (int i = 0; i < n; ++i) {
    require(finite(skeleton.joints[i]), "joint " + std::to_string(i) + " is not finite");
    const int p = skeleton.parents[i];
    require(p >= -1 && p < n, "joint " + std::to_string(i) + " has bad parent index " + std::to_string(p));
    require(p != i, "joint " + std::to_string(i) + " is its own parent");
  }
  require(is_forest(skeleton.parents), "skeleton parents contain a cycle");
}

void validate(const SkinWeights& skin, double sum_tolerance) {
  require(skin.joint_count >= 0, "skin joint_count is negative");
  for (std::size_t v = 0; v < skin.entries.size(); ++v) {
    double sum = 0.0;
    for (const Influence& inf : skin.entries[v]) {
      require(inf.joint >= 0 && inf.joint < skin.joint_count,
              "skin vertex " + std::to_string(v) + " references bad joint " + std::to_string(inf.joint));
      require(std::isfinite(inf.weight) && inf.weight >= 0.0 && inf.weight <= 1.0 + sum_tolerance,
              "skin vertex " + std::to_string(v) + " has weight outside [0, 1]");
      sum += inf.weight;
    }
    require(std::abs(sum - 1.0) <= sum_tolerance,
            "skin vertex " + std::to_string(v) + " weights sum to " + std::to_string(sum));
  }
}

void validate(const Rig& rig) {
  validate(rig.mesh);
  validate(rig.skeleton);
  if (rig.skin) {
    require(rig.skin->joint_count == static_cast<int>(rig.skeleton.size()),
            "skin joint_count differs from skeleton joint count");
    require(rig.skin->vertex_count() == rig.mesh.vertices.size(),
            "skin entry count differs from mesh vertex count");
    validate(*rig.skin);
  }
}

std::vector<std::vector<int>> children_of(const Skeleton& skeleton) {
  std::vector<std::vector<int>> children(skeleton.size());
  for (std::size_t i = 0; i < skeleton.size(); ++i)
    if (skeleton.parents[i] >= 0) children[skeleton.parents[i]].push_back(static_cast<int>(i));
  return children;
}

void renormalize(SkinWeights& skin, double tolerance) {
  for (std::size_t v = 0; v < skin.entries.size(); ++v) {
    double sum = 0.0;
    for (const Influence& inf : skin.entries[v]) {
      require(inf.weight >= 0.0, "skin vertex " + std::to_string(v) + " has a negative weight");
      sum += inf.weight;
    }
    require(std::abs(sum - 1.0) <= tolerance,
            "skin vertex " + std::to_string(v) + " weights sum to " + std::to_string(sum));
    for (Influence& inf : skin.entries[v]) inf.weight /= sum;
  }
}

Aabb bounds(std::span<const Vec3> points) {
  Aabb box;
  for (const Vec3& p : points) box.extend(p);
  return box;
}

void apply(const Normalization& t, Rig& rig) {
  for (Vec3& v : rig.mesh.vertices) v = t.apply(v);
  for (Vec3& j : rig.skeleton.joints) j = t.apply(j);
}

NormalizedRig normalize_rig(const Rig& rig) {
  require(!rig.mesh.vertices.empty(), "cannot normalize an empty mesh");
  const Aabb box = bounds(rig.mesh.vertices);
  const double extent = box.extent().maxCoeff();

  Normalization t;
  t.offset = -box.center();
  t.scale = extent > 0.0 ? 1.0 / extent : 1.0;

  NormalizedRig out{rig, t};
  apply(t, out.rig);
  return out;
}

}  // namespace rigfield
