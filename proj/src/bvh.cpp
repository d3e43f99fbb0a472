#include "rigfield/bvh.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "rigfield/error.hpp"

namespace rigfield {

namespace {

TrianglePoint closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b, int ia, int ib) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  TrianglePoint out{a + t * ab, Vec3::Zero()};
  out.barycentric[ia] = 1.0 - t;
  out.barycentric[ib] += t;
  return out;
}

TrianglePoint closest_on_degenerate(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const TrianglePoint candidates[3] = {closest_on_segment(p, a, b, 0, 1), closest_on_segment(p, b, c, 1, 2),
                                       closest_on_segment(p, c, a, 2, 0)};
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if ((candidates[i].point - p).squaredNorm() < (candidates[best].point - p).squaredNorm()) best = i;
  return candidates[best];
}

}  // namespace

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a;
  const double scale = std::max(ab.squaredNorm(), ac.squaredNorm());
  if (ab.cross(ac).squaredNorm() <= 1e-24 * scale * scale) return closest_on_degenerate(p, a, b, c);

  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, {1, 0, 0}};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, {0, 1, 0}};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1 - v, v, 0}};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, {0, 0, 1}};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1 - w, 0, w}};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0, 1 - w, w}};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {a + ab * v + ac * w, {1 - v - w, v, w}};
}

namespace {

void consider(const Mesh& mesh, int tri, const Vec3& q, SurfaceHit& best) {
  const Triangle& t = mesh.triangles[tri];
  const TrianglePoint tp = closest_point_on_triangle(q, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
  const double d2 = (tp.point - q).squaredNorm();
  if (d2 < best.squared_distance || (d2 == best.squared_distance && tri < best.triangle)) {
    best.triangle = tri;
    best.point = tp.point;
    best.barycentric = tp.barycentric;
    best.squared_distance = d2;
  }
}

}  // namespace

SurfaceHit closest_point_brute_force(const Mesh& mesh, const Vec3& query) {
  SurfaceHit best;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) consider(mesh, static_cast<int>(t), query, best);
  best.distance = std::sqrt(best.squared_distance);
  return best;
}

std::uint64_t mesh_hash(const Mesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](std::uint64_t word, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (word >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  feed(mesh.vertices.size(), 8);
  for (const Vec3& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      std::uint64_t bits;
      std::memcpy(&bits, &v[a], sizeof bits);
      feed(bits, 8);
    }
  feed(mesh.triangles.size(), 8);
  for (const Triangle& t : mesh.triangles)
    for (int i : t) feed(static_cast<std::uint32_t>(i), 4);
  return h;
}

TriangleBvh TriangleBvh::build(const Mesh& mesh, int max_leaf_size) {
  require(!mesh.triangles.empty(), "cannot build a BVH over a mesh without triangles");
  require(max_leaf_size >= 1, "BVH leaf size must be at least 1");
  validate(mesh);

  TriangleBvh bvh;
  bvh.mesh_ = std::make_shared<const Mesh>(mesh);
  const std::size_t n = mesh.triangles.size();
  std::vector<Aabb> boxes(n);
  Points centroids(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (int i : mesh.triangles[t]) boxes[t].extend(mesh.vertices[i]);
    centroids[t] = boxes[t].center();
  }
  bvh.order_.resize(n);
  std::iota(bvh.order_.begin(), bvh.order_.end(), 0u);

  struct Task {
    std::uint32_t first, count;
    int node;
  };
  bvh.nodes_.push_back({});
  std::vector<Task> stack{{0, static_cast<std::uint32_t>(n), 0}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const auto begin = bvh.order_.begin() + task.first;
    const auto end = begin + task.count;

    Aabb box, centroid_box;
    for (auto it = begin; it != end; ++it) {
      box.extend(boxes[*it]);
      centroid_box.extend(centroids[*it]);
    }
    bvh.nodes_[task.node].box = box;
    if (task.count <= static_cast<std::uint32_t>(max_leaf_size)) {
      bvh.nodes_[task.node].first = task.first;
      bvh.nodes_[task.node].count = task.count;
      continue;
    }

    int axis = 0;
    const Vec3 extent = centroid_box.extent();
    if (extent[1] > extent[axis]) axis = 1;
    if (extent[2] > extent[axis]) axis = 2;
    const std::uint32_t half = task.count / 2;
    std::nth_element(begin, begin + half, end, [&](std::uint32_t a, std::uint32_t b) {
      if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
      return a < b;
    });

    const int left = static_cast<int>(bvh.nodes_.size());
    bvh.nodes_.push_back({});
    const int right = static_cast<int>(bvh.nodes_.size());
    bvh.nodes_.push_back({});
    bvh.nodes_[task.node].left = left;
    bvh.nodes_[task.node].right = right;
    stack.push_back({task.first + half, task.count - half, right});
    stack.push_back({task.first, half, left});
  }
  return bvh;
}

SurfaceHit TriangleBvh::closest_point(const Vec3& query) const {
  SurfaceHit best;
  struct Entry {
    int node;
    double d2;
  };
  std::vector<Entry> stack;
  stack.reserve(64);
  stack.push_back({0, nodes_[0].box.squared_distance(query)});
  while (!stack.empty()) {
    const Entry e = stack.back();
    stack.pop_back();
    // Equal distances are still visited so ties resolve to the lowest index.
    if (e.d2 > best.squared_distance) continue;
    const Node& node = nodes_[e.node];
    if (node.leaf()) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
        consider(*mesh_, static_cast<int>(order_[i]), query, best);
      continue;
    }
    const double dl = nodes_[node.left].box.squared_distance(query);
    const double dr = nodes_[node.right].box.squared_distance(query);
    if (dl <= dr) {
      stack.push_back({node.right, dr});
      stack.push_back({node.left, dl});
    } else {
      stack.push_back({node.left, dl});
      stack.push_back({node.right, dr});
    }
  }
  best.distance = std::sqrt(best.squared_distance);
  return best;
}

namespace {

constexpr char kMagic[4] = {'R', 'B', 'V', 'H'};
constexpr std::uint32_t kVersion = 1;

void put(std::string& out, std::uint64_t word, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((word >> (8 * i)) & 0xffu));
}

void put_double(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put(out, bits, 8);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t get(int n) {
    require(pos_ + n <= bytes_.size(), "BVH cache is truncated");
    std::uint64_t word = 0;
    for (int i = 0; i < n; ++i) word |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return word;
  }
  double get_double() {
    const std::uint64_t bits = get(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string TriangleBvh::serialize() const {
  std::string out(kMagic, 4);
  put(out, kVersion, 4);
  put(out, mesh_hash(*mesh_), 8);
  put(out, nodes_.size(), 4);
  for (const Node& node : nodes_) {
    for (int a = 0; a < 3; ++a) put_double(out, node.box.lo[a]);
    for (int a = 0; a < 3; ++a) put_double(out, node.box.hi[a]);
    put(out, static_cast<std::uint32_t>(node.left), 4);
    put(out, static_cast<std::uint32_t>(node.right), 4);
    put(out, node.first, 4);
    put(out, node.count, 4);
  }
  put(out, order_.size(), 4);
  for (std::uint32_t t : order_) put(out, t, 4);
  return out;
}

TriangleBvh TriangleBvh::deserialize(const std::string& bytes, const Mesh& mesh) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0, "not a BVH cache (bad magic)");
  Reader in(bytes);
  in.get(4);
  require(in.get(4) == kVersion, "unsupported BVH cache version");
  require(in.get(8) == mesh_hash(mesh), "BVH cache was built for a different mesh");

  TriangleBvh bvh;
  bvh.mesh_ = std::make_shared<const Mesh>(mesh);
  const std::uint64_t node_count = in.get(4);
  require(node_count >= 1 && node_count <= 2 * mesh.triangles.size(), "BVH cache has an implausible node count");
  bvh.nodes_.resize(node_count);
  for (Node& node : bvh.nodes_) {
    for (int a = 0; a < 3; ++a) node.box.lo[a] = in.get_double();
    for (int a = 0; a < 3; ++a) node.box.hi[a] = in.get_double();
    node.left = static_cast<std::int32_t>(static_cast<std::uint32_t>(in.get(4)));
    node.right = static_cast<std::int32_t>(static_cast<std::uint32_t>(in.get(4)));
    node.first = static_cast<std::uint32_t>(in.get(4));
    node.count = static_cast<std::uint32_t>(in.get(4));
  }
  const std::uint64_t tri_count = in.get(4);
  require(tri_count == mesh.triangles.size(), "BVH cache triangle count differs from mesh");
  bvh.order_.resize(tri_count);
  std::vector<char> seen(tri_count, 0);
  for (std::uint32_t& t : bvh.order_) {
    t = static_cast<std::uint32_t>(in.get(4));
    require(t < tri_count && !seen[t], "BVH cache triangle permutation is invalid");
    seen[t] = 1;
  }
  require(in.done(), "BVH cache has trailing bytes");
  for (const Node& node : bvh.nodes_) {
    if (node.leaf())
      require(static_cast<std::uint64_t>(node.first) + node.count <= tri_count, "BVH cache leaf range out of bounds");
    else
      require(node.left > 0 && node.right > 0 && static_cast<std::uint64_t>(node.left) < node_count &&
                  static_cast<std::uint64_t>(node.right) < node_count,
              "BVH cache child index out of bounds");
  }
  return bvh;
}

void TriangleBvh::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TriangleBvh TriangleBvh::load(const std::filesystem::path& path, const Mesh& mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str(), mesh);
}

std::vector<Influence> blend_influences(const SkinWeights& skin, const Triangle& tri, const Vec3& barycentric) {
  std::map<int, double> merged;
  for (int corner = 0; corner < 3; ++corner) {
    const double b = barycentric[corner];
    if (b <= 0.0) continue;
    for (const Influence& inf : skin.entries[tri[corner]]) merged[inf.joint] += b * inf.weight;
  }
  double total = 0.0;
  for (const auto& [joint, w] : merged) total += w;
  std::vector<Influence> out;
  for (const auto& [joint, w] : merged)
    if (w > 0.0) out.push_back({joint, w / total});
  return out;
}

SkinWeights transfer_skin_bvh(const TriangleBvh& bvh, const SkinWeights& src_skin, const Mesh& dst) {
  require(src_skin.vertex_count() == bvh.mesh().vertices.size(), "source skin does not match the BVH mesh");
  SkinWeights out;
  out.joint_count = src_skin.joint_count;
  out.entries.reserve(dst.vertices.size());
  for (const Vec3& v : dst.vertices) {
    const SurfaceHit hit = bvh.closest_point(v);
    out.entries.push_back(blend_influences(src_skin, bvh.mesh().triangles[hit.triangle], hit.barycentric));
  }
  return out;
}

SkinWeights transfer_skin_bvh(const Rig& src, const Mesh& dst) {
  require(src.skin.has_value(), "source rig has no skin");
  return transfer_skin_bvh(TriangleBvh::build(src.mesh), *src.skin, dst);
}

SkinWeights transfer_skin_nn(const Rig& src, const Mesh& dst) {
  require(src.skin.has_value(), "source rig has no skin");
  require(!src.mesh.vertices.empty(), "source mesh has no vertices");
  SkinWeights out;
  out.joint_count = src.skin->joint_count;
  out.entries.reserve(dst.vertices.size());
  for (const Vec3& v : dst.vertices) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < src.mesh.vertices.size(); ++s) {
      const double d = (src.mesh.vertices[s] - v).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    out.entries.push_back(src.skin->entries[best]);
  }
  return out;
}

}  // namespace rigfield
