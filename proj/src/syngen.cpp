#include "rigfield/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "rigfield/error.hpp"
#include "rigfield/metrics.hpp"

namespace rigfield {

namespace {

template <typename E>
E parse_enum(const std::string& name, const std::vector<std::pair<std::string, E>>& table, const char* what) {
  for (const auto& [key, value] : table)
    if (key == name) return value;
  fail_validation(std::string("unknown ") + what + " '" + name + "'");
}

const std::vector<std::pair<std::string, Family>> kFamilies{
    {"chain", Family::Chain}, {"star", Family::Star}, {"tree", Family::Tree}, {"quadruped", Family::Quadruped}};
const std::vector<std::pair<std::string, MeshStyle>> kStyles{{"capsule", MeshStyle::Capsule},
                                                             {"sphere", MeshStyle::Sphere}};
const std::vector<std::pair<std::string, Corruption>> kCorruptions{{"insert-mid-bone", Corruption::InsertMidBone},
                                                                   {"duplicate-branch", Corruption::DuplicateBranch},
                                                                   {"delete-branch", Corruption::DeleteBranch},
                                                                   {"jitter-joints", Corruption::JitterJoints}};

template <typename E>
std::string name_of(E value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [key, v] : table)
    if (v == value) return key;
  return "?";
}

}  // namespace

Family family_from_string(const std::string& name) { return parse_enum(name, kFamilies, "family"); }
MeshStyle mesh_style_from_string(const std::string& name) { return parse_enum(name, kStyles, "mesh style"); }
Corruption corruption_from_string(const std::string& name) { return parse_enum(name, kCorruptions, "corruption"); }
std::string to_string(Family family) { return name_of(family, kFamilies); }
std::string to_string(MeshStyle style) { return name_of(style, kStyles); }
std::string to_string(Corruption kind) { return name_of(kind, kCorruptions); }

void validate(const SynthSpec& s) {
  require(s.family == Family::Quadruped || s.joint_count >= 1, "joint_count must be at least 1");
  require(s.family == Family::Quadruped || s.joint_count <= 1000, "joint_count must be at most 1000");
  require(s.root_count >= 1, "root_count must be at least 1");
  require(s.family == Family::Quadruped ? s.root_count == 1 : s.root_count <= s.joint_count,
          "root_count exceeds the number of joints");
  require(s.bone_min > 0.0 && s.bone_max >= s.bone_min && s.bone_max <= 0.4, "bone length range must satisfy 0 < min <= max <= 0.4");
  require(s.min_separation >= 0.0 && s.min_separation < s.bone_min, "min_separation must lie in [0, bone_min)");
  require(s.radius > 0.0 && s.radius <= 0.1, "radius must lie in (0, 0.1]");
  require(s.segments >= 3, "segments must be at least 3");
  require(s.falloff > 0.0, "falloff must be positive");
}

void append(Mesh& dst, const Mesh& src) {
  const int base = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const Triangle& t : src.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

namespace {

// Rings of a surface of revolution around axis w, closed by two poles.
Mesh revolve(const Vec3& bottom_pole, const Vec3& top_pole, const std::vector<std::pair<Vec3, double>>& rings,
             const Vec3& u, const Vec3& v, int segments) {
  Mesh m;
  m.vertices.push_back(bottom_pole);
  for (const auto& [c, r] : rings)
    for (int k = 0; k < segments; ++k) {
      const double th = 2.0 * std::numbers::pi * k / segments;
      m.vertices.push_back(c + r * (std::cos(th) * u + std::sin(th) * v));
    }
  m.vertices.push_back(top_pole);
  const int top = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int i, int k) { return 1 + i * segments + (k % segments); };
  const int nr = static_cast<int>(rings.size());
  for (int k = 0; k < segments; ++k) m.triangles.push_back({0, ring(0, k + 1), ring(0, k)});
  for (int i = 0; i + 1 < nr; ++i)
    for (int k = 0; k < segments; ++k) {
      m.triangles.push_back({ring(i, k), ring(i, k + 1), ring(i + 1, k + 1)});
      m.triangles.push_back({ring(i, k), ring(i + 1, k + 1), ring(i + 1, k)});
    }
  for (int k = 0; k < segments; ++k) m.triangles.push_back({top, ring(nr - 1, k), ring(nr - 1, k + 1)});
  return m;
}

void frame(const Vec3& w, Vec3& u, Vec3& v) {
  const Vec3 helper = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = w.cross(helper).normalized();
  v = w.cross(u);
}

}  // namespace

Mesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments) {
  require(radius > 0.0 && segments >= 3, "capsule needs a positive radius and at least 3 segments");
  const Vec3 d = b - a;
  const double len = d.norm();
  const Vec3 w = len > 1e-12 ? Vec3(d / len) : Vec3::UnitZ();
  Vec3 u, v;
  frame(w, u, v);
  std::vector<std::pair<Vec3, double>> rings;
  const double lat[] = {-std::numbers::pi / 3, -std::numbers::pi / 6, 0.0};
  for (double phi : lat) rings.emplace_back(a + radius * std::sin(phi) * w, radius * std::cos(phi));
  if (len > 1e-12) rings.emplace_back(b, radius);
  for (double phi : {std::numbers::pi / 6, std::numbers::pi / 3})
    rings.emplace_back((len > 1e-12 ? b : a) + radius * std::sin(phi) * w, radius * std::cos(phi));
  return revolve(a - radius * w, (len > 1e-12 ? b : a) + radius * w, rings, u, v, segments);
}

Mesh make_uv_sphere(const Vec3& center, double radius, int rings, int segments) {
  require(radius > 0.0 && rings >= 2 && segments >= 3, "uv sphere needs radius > 0, rings >= 2, segments >= 3");
  std::vector<std::pair<Vec3, double>> rs;
  for (int i = 1; i < rings; ++i) {
    const double phi = -std::numbers::pi / 2 + std::numbers::pi * i / rings;
    rs.emplace_back(center + radius * std::sin(phi) * Vec3::UnitZ(), radius * std::cos(phi));
  }
  return revolve(center - radius * Vec3::UnitZ(), center + radius * Vec3::UnitZ(), rs, Vec3::UnitX(), Vec3::UnitY(),
                 segments);
}

Mesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  require(radius > 0.0 && subdivisions >= 0 && subdivisions <= 8, "icosphere needs radius > 0 and 0..8 subdivisions");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Points v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                          {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                          {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const Triangle& tri : f) {
      const int ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  Mesh m;
  for (const Vec3& p : v) m.vertices.push_back(center + radius * p);
  m.triangles = std::move(f);
  return m;
}

Eigen::VectorXd analytic_skin_at(const Skeleton& skeleton, const Vec3& p, double falloff) {
  require(!skeleton.joints.empty(), "analytic skin needs joints");
  require(falloff > 0.0, "falloff must be positive");
  const auto children = children_of(skeleton);
  const auto n = static_cast<Eigen::Index>(skeleton.size());
  Eigen::VectorXd logits(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3& a = skeleton.joints[j];
    double d = children[j].empty() ? (p - a).norm() : std::numeric_limits<double>::infinity();
    for (int c : children[j]) d = std::min(d, point_segment_distance(p, a, skeleton.joints[c]));
    logits[j] = -d / falloff;
  }
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

namespace {

SkinWeights from_dense(const Eigen::MatrixXd& w) {
  SkinWeights s;
  s.joint_count = static_cast<int>(w.cols());
  s.entries.resize(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index v = 0; v < w.rows(); ++v) {
    const double sum = w.row(v).sum();
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (w(v, j) > 0.0) s.entries[v].push_back({static_cast<int>(j), w(v, j) / sum});
  }
  return s;
}

}  // namespace

SkinWeights analytic_skin(const Skeleton& skeleton, const Points& vertices, double falloff) {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(vertices.size()), static_cast<Eigen::Index>(skeleton.size()));
  for (std::size_t v = 0; v < vertices.size(); ++v)
    w.row(static_cast<Eigen::Index>(v)) = analytic_skin_at(skeleton, vertices[v], falloff).transpose();
  return from_dense(w);
}

namespace {

constexpr double kBox = 0.4;

bool inside(const Vec3& p) { return (p.array().abs() <= kBox).all(); }

bool separated(const Points& joints, const Vec3& p, double min_sep) {
  for (const Vec3& q : joints)
    if ((p - q).norm() < min_sep) return false;
  return true;
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 d;
  do {
    d = Vec3(n(rng), n(rng), n(rng));
  } while (d.norm() < 1e-9);
  return d.normalized();
}

bool try_forest(const SynthSpec& s, std::mt19937_64& rng, Skeleton& out) {
  out.joints.clear();
  out.parents.clear();
  std::uniform_real_distribution<double> root_pos(-0.3, 0.3);
  std::uniform_real_distribution<double> length(s.bone_min, s.bone_max);
  const int trees = s.root_count;
  for (int t = 0; t < trees; ++t) {
    const int size = s.joint_count / trees + (t < s.joint_count % trees ? 1 : 0);
    const int root = static_cast<int>(out.joints.size());
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const Vec3 p(root_pos(rng), root_pos(rng), root_pos(rng));
      if (separated(out.joints, p, s.min_separation)) {
        out.joints.push_back(p);
        out.parents.push_back(-1);
        placed = true;
      }
    }
    if (!placed) return false;
    for (int k = 1; k < size; ++k) {
      int parent = root;
      if (s.family == Family::Chain) parent = static_cast<int>(out.joints.size()) - 1;
      if (s.family == Family::Tree) parent = root + std::uniform_int_distribution<int>(0, k - 1)(rng);
      placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const Vec3 p = out.joints[parent] + length(rng) * random_direction(rng);
        if (inside(p) && separated(out.joints, p, s.min_separation)) {
          out.joints.push_back(p);
          out.parents.push_back(parent);
          placed = true;
        }
      }
      if (!placed) return false;
    }
  }
  return true;
}

Skeleton quadruped(std::mt19937_64& rng) {
  // Spine root, spine, chest, neck, head, then four three-joint legs.
  Skeleton s;
  auto add = [&](Vec3 p, int parent) {
    s.joints.push_back(p);
    s.parents.push_back(parent);
    return static_cast<int>(s.joints.size()) - 1;
  };
  const int pelvis = add({-0.18, 0.08, 0.0}, -1);
  const int spine = add({0.0, 0.1, 0.0}, pelvis);
  const int chest = add({0.18, 0.08, 0.0}, spine);
  const int neck = add({0.27, 0.18, 0.0}, chest);
  add({0.34, 0.28, 0.0}, neck);
  for (double side : {-1.0, 1.0}) {
    for (int hip : {chest, pelvis}) {
      const double x = s.joints[hip].x();
      const int top = add({x, 0.02, 0.09 * side}, hip);
      const int mid = add({x + 0.02, -0.14, 0.09 * side}, top);
      add({x + 0.04, -0.3, 0.09 * side}, mid);
    }
  }
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (Vec3& p : s.joints) p += Vec3(jitter(rng), jitter(rng), jitter(rng));
  return s;
}

}  // namespace

Rig generate(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  Rig rig;
  if (spec.family == Family::Quadruped) {
    rig.skeleton = quadruped(rng);
  } else {
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) ok = try_forest(spec, rng, rig.skeleton);
    if (!ok) fail_validation("could not place joints with the requested separation");
  }

  const auto children = children_of(rig.skeleton);
  for (std::size_t j = 0; j < rig.skeleton.size(); ++j) {
    const Vec3& p = rig.skeleton.joints[j];
    if (spec.mesh == MeshStyle::Sphere) {
      append(rig.mesh, make_capsule(p, p, spec.radius, spec.segments));
      continue;
    }
    if (!rig.skeleton.is_root(j))
      append(rig.mesh, make_capsule(p, rig.skeleton.joints[rig.skeleton.parents[j]], spec.radius, spec.segments));
    else if (children[j].empty())
      append(rig.mesh, make_capsule(p, p, spec.radius, spec.segments));
  }

  if (spec.normalize) rig = normalize_rig(rig).rig;
  if (spec.skin) rig.skin = analytic_skin(rig.skeleton, rig.mesh.vertices, spec.falloff);
  validate(rig);
  return rig;
}

namespace {

std::vector<int> subtree(const Skeleton& s, int root) {
  const auto children = children_of(s);
  std::vector<int> out{root};
  for (std::size_t k = 0; k < out.size(); ++k)
    for (int c : children[out[k]]) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> non_roots(const Skeleton& s) {
  std::vector<int> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.is_root(i)) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

Rig corrupt(const Rig& rig, Corruption kind, double magnitude, std::uint64_t seed) {
  validate(rig);
  require(std::isfinite(magnitude) && magnitude >= 0.0, "corruption magnitude must be nonnegative");
  std::mt19937_64 rng(seed);
  Rig out = rig;
  Skeleton& s = out.skeleton;
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd w;
  if (rig.skin) w = rig.skin->dense();

  auto pick = [&](const char* what) {
    const std::vector<int> candidates = non_roots(s);
    if (candidates.empty()) fail_validation(std::string(what) + " needs a non-root joint");
    return candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  };

  switch (kind) {
    case Corruption::InsertMidBone: {
      const int c = pick("insert-mid-bone");
      const int p = s.parents[c];
      const Vec3 a = s.joints[p], b = s.joints[c];
      s.joints.push_back(0.5 * (a + b));
      s.parents.push_back(p);
      s.parents[c] = static_cast<int>(n);
      if (rig.skin) {
        w.conservativeResize(Eigen::NoChange, n + 1);
        const double len2 = (b - a).squaredNorm();
        for (Eigen::Index v = 0; v < w.rows(); ++v) {
          const double t = std::clamp((rig.mesh.vertices[v] - a).dot(b - a) / len2, 0.0, 1.0);
          w(v, n) = w(v, p) * t;
          w(v, p) *= 1.0 - t;
        }
      }
      break;
    }
    case Corruption::DuplicateBranch: {
      const int b = pick("duplicate-branch");
      const std::vector<int> branch = subtree(s, b);
      const Vec3 shift = magnitude * random_direction(rng);
      std::map<int, int> copy;
      for (int j : branch) copy[j] = static_cast<int>(s.joints.size()) + static_cast<int>(copy.size());
      for (int j : branch) {
        s.joints.push_back(s.joints[j] + shift);
        s.parents.push_back(j == b ? s.parents[b] : copy.at(s.parents[j]));
      }
      if (rig.skin) {
        w.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(s.size()));
        w.rightCols(static_cast<Eigen::Index>(branch.size())).setZero();
      }
      break;
    }
    case Corruption::DeleteBranch: {
      const int b = pick("delete-branch");
      const std::vector<int> branch = subtree(s, b);
      const int attach = s.parents[b];
      std::vector<int> remap(s.size(), -1);
      Skeleton kept;
      for (std::size_t j = 0; j < s.size(); ++j)
        if (!std::binary_search(branch.begin(), branch.end(), static_cast<int>(j))) {
          remap[j] = static_cast<int>(kept.joints.size());
          kept.joints.push_back(s.joints[j]);
          kept.parents.push_back(s.parents[j]);
        }
      for (int& p : kept.parents)
        if (p >= 0) p = remap[p];
      if (rig.skin) {
        Eigen::MatrixXd nw = Eigen::MatrixXd::Zero(w.rows(), static_cast<Eigen::Index>(kept.size()));
        for (Eigen::Index j = 0; j < n; ++j) nw.col(remap[j] >= 0 ? remap[j] : remap[attach]) += w.col(j);
        w = std::move(nw);
      }
      s = std::move(kept);
      break;
    }
    case Corruption::JitterJoints: {
      std::normal_distribution<double> noise(0.0, 1.0);
      for (Vec3& p : s.joints) p += magnitude * Vec3(noise(rng), noise(rng), noise(rng));
      break;
    }
  }
  if (rig.skin) out.skin = from_dense(w);
  validate(out);
  return out;
}

}  // namespace rigfield
