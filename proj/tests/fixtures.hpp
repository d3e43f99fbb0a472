#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "rigfield/rig.hpp"

namespace fixture {

using rigfield::Mesh;
using rigfield::Skeleton;
using rigfield::Vec3;

// Closed box surface, 12 triangles.
inline Mesh box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

inline Skeleton chain(const std::vector<Vec3>& joints) {
  Skeleton s;
  s.joints = joints;
  for (std::size_t i = 0; i < joints.size(); ++i) s.parents.push_back(static_cast<int>(i) - 1);
  return s;
}

// Per-process scratch directory, emptied on first use.
inline std::filesystem::path scratch(const std::string& name) {
  static const std::filesystem::path root = [] {
    auto p = std::filesystem::temp_directory_path() / ("rigfield_tests_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
  }();
  return root / name;
}

}  // namespace fixture
