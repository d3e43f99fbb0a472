#pragma once

#include <cstdint>
#include <vector>

#include "rigfield/rig_io.hpp"
#include "rigfield/voxel_grid.hpp"

namespace rigfield {

/// Field value at one voxel: offsets from the voxel center to its nearest joint
/// and to that joint's parent, plus the assignment confidence. A single
/// confidence channel is stored by setting conf_j == conf_p.
struct FieldSample {
  Voxel voxel{};
  Vec3 joint_offset = Vec3::Zero();
  Vec3 parent_offset = Vec3::Zero();
  double conf_j = 1.0;
  double conf_p = 1.0;
};

/// One sample per occupied voxel, stored in the grid's voxel order.
struct SkeletonField {
  SparseVoxelGrid grid;
  std::vector<FieldSample> samples;
};

/// 1 - d1^2 / d2^2 clamped to [0, 1], where d1 and d2 are the squared distances
/// to the nearest and second-nearest joint.
double assignment_confidence(double nearest_sq, double second_sq);

/// Exact field of a skeleton on a voxel support. Roots point their parent
/// offset at themselves.
SkeletonField encode_field(const Skeleton& skeleton, const SparseVoxelGrid& grid);

/// Adds zero-mean Gaussian noise of standard deviation `sigma` to every offset
/// coordinate; confidences are untouched.
void add_offset_noise(SkeletonField& field, double sigma, std::uint64_t seed);

/// Mean over voxels of c_gt * (|joint offset error|^2 + |parent offset error|^2).
double confidence_weighted_error(const SkeletonField& pred, const SkeletonField& gt);

struct FieldVotes {
  Points joints;
  Points parents;
  std::vector<double> conf_j;
  std::vector<double> conf_p;

  std::size_t size() const { return joints.size(); }
};

FieldVotes field_votes(const SkeletonField& field);

struct ClusterParams {
  double bandwidth = 2.0 / 64.0;
  int iterations = 10;
  double convergence_tol = bandwidth / 10.0;
  double merge_radius = bandwidth / 2.0;
  int min_cluster_size = 3;
  // Accepted for parity with the published inputs; it has no effect.
  double threshold = 0.0;
  // Votes with joint confidence below this are discarded before clustering.
  double min_confidence = 0.05;

  /// Literal defaults derived from h: tolerance h/10, merge radius h/2.
  static ClusterParams with_bandwidth(double h);
  /// Bandwidth expressed in voxel edges of an N^3 grid (default 2 edges).
  static ClusterParams for_resolution(int resolution, double bandwidth_edges = 2.0);
};

void validate(const ClusterParams& params);

struct MeanShiftResult {
  Points modes;
  int passes = 0;           // number of shift passes evaluated
  bool early_stop = false;  // stopped because the largest shift was within tolerance
  double last_max_shift = 0.0;
};

/// Confidence-weighted Gaussian mean-shift restricted to neighbors within h.
MeanShiftResult mean_shift(const Points& points, const std::vector<double>& weights, const ClusterParams& params);

/// Connected components of the graph linking points closer than `radius`.
/// Labels are 0-based in order of first appearance.
std::vector<int> merge_clusters(const Points& points, double radius);

/// Parent index per cluster: nearest centroid to each parent estimate; a
/// cluster whose estimate is nearest to itself becomes a root. Cycles are
/// broken at the member with the largest mass.
std::vector<int> link_parents(const Points& centroids, const Points& parent_estimates,
                              const std::vector<double>& masses);

struct ClusterTrace {
  std::size_t votes_used = 0;
  MeanShiftResult shift;
  std::vector<int> labels;         // per used vote
  std::vector<int> cluster_sizes;  // per label, before filtering
  std::size_t clusters_kept = 0;
};

/// Field-to-skeleton clustering of joint/parent votes. Output joints are sorted
/// lexicographically. Throws Validation when every cluster is filtered out.
Skeleton cluster_skeleton(const FieldVotes& votes, const ClusterParams& params, ClusterTrace* trace = nullptr);

Skeleton decode_skeleton(const SkeletonField& field, const ClusterParams& params);

Json field_to_json(const SkeletonField& field);
SkeletonField field_from_json(const Json& doc);

}  // namespace rigfield
