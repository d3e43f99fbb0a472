#include "rigfield/skeleton_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "rigfield/error.hpp"

namespace rigfield {

double assignment_confidence(double nearest_sq, double second_sq) {
  if (second_sq <= 0.0) return 0.0;
  return std::clamp(1.0 - nearest_sq / second_sq, 0.0, 1.0);
}

SkeletonField encode_field(const Skeleton& skeleton, const SparseVoxelGrid& grid) {
  require(!skeleton.joints.empty(), "cannot encode an empty skeleton");
  require(!grid.empty(), "cannot encode a field on an empty grid");
  validate(skeleton);

  SkeletonField field{grid, {}};
  field.samples.reserve(grid.size());
  const std::size_t m = skeleton.size();
  for (const Voxel& v : grid.voxels()) {
    const Vec3 x = grid.center(v);
    std::size_t best = 0;
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (skeleton.joints[j] - x).squaredNorm();
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const Vec3& joint = skeleton.joints[best];
    const int p = skeleton.parents[best];
    const Vec3& parent = p < 0 ? joint : skeleton.joints[p];
    const double c = m == 1 ? 1.0 : assignment_confidence(d1, d2);
    field.samples.push_back({v, joint - x, parent - x, c, c});
  }
  return field;
}

double confidence_weighted_error(const SkeletonField& pred, const SkeletonField& gt) {
  require(pred.grid == gt.grid, "fields are defined on different grids");
  require(pred.samples.size() == gt.samples.size() && !gt.samples.empty(), "field sample counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < gt.samples.size(); ++i) {
    const FieldSample& p = pred.samples[i];
    const FieldSample& g = gt.samples[i];
    total += g.conf_j * (p.joint_offset - g.joint_offset).squaredNorm() +
             g.conf_p * (p.parent_offset - g.parent_offset).squaredNorm();
  }
  return total / static_cast<double>(gt.samples.size());
}

FieldVotes field_votes(const SkeletonField& field) {
  require(!field.samples.empty(), "field has no samples");
  FieldVotes votes;
  for (const FieldSample& s : field.samples) {
    const Vec3 x = field.grid.center(s.voxel);
    votes.joints.push_back(x + s.joint_offset);
    votes.parents.push_back(x + s.parent_offset);
    votes.conf_j.push_back(s.conf_j);
    votes.conf_p.push_back(s.conf_p);
  }
  return votes;
}

ClusterParams ClusterParams::with_bandwidth(double h) {
  ClusterParams p;
  p.bandwidth = h;
  p.convergence_tol = h / 10.0;
  p.merge_radius = h / 2.0;
  return p;
}

ClusterParams ClusterParams::for_resolution(int resolution, double bandwidth_edges) {
  require(resolution >= 1, "resolution must be positive");
  return with_bandwidth(bandwidth_edges / resolution);
}

void validate(const ClusterParams& params) {
  require(params.bandwidth > 0.0, "bandwidth must be positive");
  require(params.iterations >= 1, "mean-shift iterations must be at least 1");
  require(params.merge_radius > 0.0, "merge radius must be positive");
  require(params.convergence_tol >= 0.0, "convergence tolerance must be non-negative");
  require(params.min_cluster_size >= 1, "minimum cluster size must be at least 1");
}

namespace {

// Uniform hash grid over points for fixed-radius neighbor queries.
class PointHash {
 public:
  PointHash(const Points& points, double cell) : points_(points), inv_cell_(1.0 / cell) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(static_cast<int>(i));
  }

  template <typename Fn>
  void for_each_within(const Vec3& q, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const std::array<long long, 3> c = cell_of(q);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (int j : it->second)
            if ((points_[j] - q).squaredNorm() <= r2) fn(j);
        }
  }

 private:
  static constexpr long long kSpan = 1 << 20;

  std::array<long long, 3> cell_of(const Vec3& p) const {
    std::array<long long, 3> c;
    for (int a = 0; a < 3; ++a)
      c[a] = static_cast<long long>(std::clamp(std::floor(p[a] * inv_cell_), double(-kSpan + 2), double(kSpan - 2)));
    return c;
  }
  static long long key(const std::array<long long, 3>& c) {
    return ((c[0] + kSpan) << 42) | ((c[1] + kSpan) << 21) | (c[2] + kSpan);
  }

  const Points& points_;
  double inv_cell_;
  std::unordered_map<long long, std::vector<int>> cells_;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

bool lexicographic_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace

MeanShiftResult mean_shift(const Points& points, const std::vector<double>& weights, const ClusterParams& params) {
  validate(params);
  require(points.size() == weights.size(), "mean-shift weight count differs from point count");
  const double h = params.bandwidth;
  const double inv_two_h2 = 1.0 / (2.0 * h * h);

  MeanShiftResult result;
  result.modes = points;
  Points next(points.size());
  for (int pass = 0; pass < params.iterations; ++pass) {
    const PointHash hash(result.modes, h);
    double max_shift = 0.0;
    for (std::size_t i = 0; i < result.modes.size(); ++i) {
      const Vec3& s = result.modes[i];
      Vec3 num = Vec3::Zero();
      double den = 0.0;
      hash.for_each_within(s, h, [&](int j) {
        const double w = weights[j] * std::exp(-(result.modes[j] - s).squaredNorm() * inv_two_h2);
        num += w * result.modes[j];
        den += w;
      });
      next[i] = num / (den + 1e-8);
      max_shift = std::max(max_shift, (next[i] - s).norm());
    }
    result.passes = pass + 1;
    result.last_max_shift = max_shift;
    if (max_shift <= params.convergence_tol) {
      result.early_stop = true;
      break;
    }
    std::swap(result.modes, next);
  }
  return result;
}

std::vector<int> merge_clusters(const Points& points, double radius) {
  require(radius > 0.0, "merge radius must be positive");
  std::vector<int> parent(points.size());
  std::iota(parent.begin(), parent.end(), 0);
  const PointHash hash(points, radius);
  for (std::size_t i = 0; i < points.size(); ++i)
    hash.for_each_within(points[i], radius, [&](int j) {
      const int a = find_root(parent, static_cast<int>(i));
      const int b = find_root(parent, j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    });

  std::vector<int> labels(points.size(), -1);
  std::unordered_map<int, int> label_of_root;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int r = find_root(parent, static_cast<int>(i));
    auto [it, inserted] = label_of_root.try_emplace(r, static_cast<int>(label_of_root.size()));
    labels[i] = it->second;
  }
  return labels;
}

namespace {

int nearest_centroid(const Vec3& target, const Points& centroids, const std::vector<char>& excluded) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < centroids.size(); ++u) {
    if (excluded[u]) continue;
    const double d = (target - centroids[u]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(u);
    }
  }
  return best;
}

// Members of a cycle reachable from `start`, or empty when the walk ends at a root.
std::vector<int> find_cycle(const std::vector<int>& parents, int start) {
  std::vector<int> order(parents.size(), -1);
  std::vector<int> path;
  int cur = start;
  while (cur >= 0 && order[cur] < 0) {
    order[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    cur = parents[cur];
  }
  if (cur < 0) return {};
  return {path.begin() + order[cur], path.end()};
}

}  // namespace

std::vector<int> link_parents(const Points& centroids, const Points& parent_estimates,
                              const std::vector<double>& masses) {
  const std::size_t m = centroids.size();
  require(parent_estimates.size() == m && masses.size() == m, "cluster arrays differ in length");
  std::vector<int> parents(m, -1);
  const std::vector<char> none(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const int u = nearest_centroid(parent_estimates[k], centroids, none);
    parents[k] = u == static_cast<int>(k) ? -1 : u;
  }

  for (std::size_t start = 0; start < m; ++start) {
    while (true) {
      const std::vector<int> cycle = find_cycle(parents, static_cast<int>(start));
      if (cycle.empty()) break;
      int heaviest = cycle.front();
      for (int c : cycle)
        if (masses[c] > masses[heaviest] || (masses[c] == masses[heaviest] && c < heaviest)) heaviest = c;

      std::vector<char> excluded(m, 0);
      for (int c : cycle) excluded[c] = c != heaviest;
      const int u = nearest_centroid(parent_estimates[heaviest], centroids, excluded);
      parents[heaviest] = u == heaviest ? -1 : u;
      if (parents[heaviest] >= 0 && !find_cycle(parents, heaviest).empty()) parents[heaviest] = -1;
    }
  }
  return parents;
}

Skeleton cluster_skeleton(const FieldVotes& votes, const ClusterParams& params, ClusterTrace* trace) {
  validate(params);
  const std::size_t n = votes.size();
  require(n >= 1, "no votes to cluster");
  require(votes.parents.size() == n && votes.conf_j.size() == n && votes.conf_p.size() == n,
          "vote arrays differ in length");

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < n; ++i)
    if (votes.conf_j[i] >= params.min_confidence) used.push_back(i);
  if (used.empty()) fail_validation("all votes fall below the confidence cutoff; empty skeleton");

  Points points;
  std::vector<double> weights;
  for (std::size_t i : used) {
    points.push_back(votes.joints[i]);
    weights.push_back(votes.conf_j[i]);
  }

  MeanShiftResult shift = mean_shift(points, weights, params);
  const std::vector<int> labels = merge_clusters(shift.modes, params.merge_radius);
  const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

  struct Accum {
    int count = 0;
    double wj = 0.0, wp = 0.0;
    Vec3 sj = Vec3::Zero(), sp = Vec3::Zero();
    Vec3 mj = Vec3::Zero(), mp = Vec3::Zero();  // unweighted sums, fallback for zero mass
  };
  std::vector<Accum> acc(clusters);
  for (std::size_t k = 0; k < used.size(); ++k) {
    const std::size_t i = used[k];
    Accum& a = acc[labels[k]];
    ++a.count;
    a.wj += votes.conf_j[i];
    a.wp += votes.conf_p[i];
    a.sj += votes.conf_j[i] * votes.joints[i];
    a.sp += votes.conf_p[i] * votes.parents[i];
    a.mj += votes.joints[i];
    a.mp += votes.parents[i];
  }

  struct Cluster {
    Vec3 joint, parent;
    double mass;
  };
  std::vector<Cluster> kept;
  for (const Accum& a : acc) {
    if (a.count < params.min_cluster_size) continue;
    const Vec3 j = a.wj > 0.0 ? Vec3(a.sj / a.wj) : Vec3(a.mj / a.count);
    const Vec3 p = a.wp > 0.0 ? Vec3(a.sp / a.wp) : Vec3(a.mp / a.count);
    kept.push_back({j, p, a.wj});
  }

  if (trace) {
    trace->votes_used = used.size();
    trace->shift = shift;
    trace->labels = labels;
    trace->cluster_sizes.assign(clusters, 0);
    for (int l : labels) ++trace->cluster_sizes[l];
    trace->clusters_kept = kept.size();
  }
  if (kept.empty()) fail_validation("every cluster is smaller than the minimum size; empty skeleton");

  std::sort(kept.begin(), kept.end(),
            [](const Cluster& a, const Cluster& b) { return lexicographic_less(a.joint, b.joint); });
  Points centroids, estimates;
  std::vector<double> masses;
  for (const Cluster& c : kept) {
    centroids.push_back(c.joint);
    estimates.push_back(c.parent);
    masses.push_back(c.mass);
  }
  Skeleton out{centroids, link_parents(centroids, estimates, masses)};
  return out;
}

Skeleton decode_skeleton(const SkeletonField& field, const ClusterParams& params) {
  return cluster_skeleton(field_votes(field), params);
}

Json field_to_json(const SkeletonField& field) {
  Json samples = Json::array();
  for (const FieldSample& s : field.samples)
    samples.push_back({{"voxel", {s.voxel[0], s.voxel[1], s.voxel[2]}},
                       {"joint_offset", to_json(s.joint_offset)},
                       {"parent_offset", to_json(s.parent_offset)},
                       {"conf_j", round_sig9(s.conf_j)},
                       {"conf_p", round_sig9(s.conf_p)}});
  return {{"resolution", field.grid.resolution()}, {"samples", std::move(samples)}};
}

SkeletonField field_from_json(const Json& doc) {
  require(doc.is_object() && doc.contains("resolution") && doc.contains("samples"),
          "field needs \"resolution\" and \"samples\"");
  require(doc["resolution"].is_number_integer(), "field resolution is not an integer");
  std::vector<FieldSample> samples;
  std::vector<Voxel> voxels;
  for (const Json& s : doc["samples"]) {
    require(s.is_object() && s.contains("voxel") && s.contains("joint_offset") && s.contains("parent_offset") &&
                s.contains("conf_j") && s.contains("conf_p"),
            "field sample is missing a key");
    FieldSample fs;
    const Json& v = s["voxel"];
    require(v.is_array() && v.size() == 3 && v[0].is_number_integer() && v[1].is_number_integer() &&
                v[2].is_number_integer(),
            "sample voxel is not an integer triple");
    fs.voxel = {v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
    fs.joint_offset = vec3_from_json(s["joint_offset"]);
    fs.parent_offset = vec3_from_json(s["parent_offset"]);
    require(s["conf_j"].is_number() && s["conf_p"].is_number(), "sample confidence is not a number");
    fs.conf_j = s["conf_j"].get<double>();
    fs.conf_p = s["conf_p"].get<double>();
    require(fs.conf_j >= 0.0 && fs.conf_j <= 1.0 && fs.conf_p >= 0.0 && fs.conf_p <= 1.0,
            "sample confidence outside [0, 1]");
    voxels.push_back(fs.voxel);
    samples.push_back(fs);
  }
  SkeletonField field{SparseVoxelGrid(doc["resolution"].get<int>(), voxels), {}};
  require(field.grid.size() == samples.size(), "field has duplicate voxels");
  std::sort(samples.begin(), samples.end(), [](const FieldSample& a, const FieldSample& b) { return a.voxel < b.voxel; });
  field.samples = std::move(samples);
  return field;
}

void add_offset_noise(SkeletonField& field, double sigma, std::uint64_t seed) {
  require(std::isfinite(sigma) && sigma >= 0.0, "noise sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma > 0.0 ? sigma : 1.0);
  if (sigma == 0.0) return;
  for (FieldSample& s : field.samples) {
    s.joint_offset += Vec3(n(rng), n(rng), n(rng));
    s.parent_offset += Vec3(n(rng), n(rng), n(rng));
  }
}

}  // namespace rigfield
