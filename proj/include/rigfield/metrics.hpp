#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rigfield/icp.hpp"
#include "rigfield/rig.hpp"
#include "rigfield/rig_io.hpp"
#include "rigfield/transport.hpp"

namespace rigfield {

inline constexpr int kDefaultSamplesPerBone = 32;

struct ChamferMetrics {
  double joint_to_joint = 0.0;
  double joint_to_bone = 0.0;
  double bone_to_bone = 0.0;
};

/// Distance from p to the segment [a, b].
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Symmetric Chamfer metrics: each is the mean of the two directional
/// mean-nearest distances. Bones run from each joint to its parent; a root
/// contributes its own joint as a zero-length bone.
ChamferMetrics chamfer_metrics(const Skeleton& pred, const Skeleton& gt, int samples_per_bone = kDefaultSamplesPerBone);

struct SkinMetrics {
  double l1 = 0.0;
  double l2 = 0.0;
  double kl = 0.0;
};

/// Pushes predicted weights onto gt joints through the row-normalized plan
/// (pred joints x gt joints), pairs every predicted vertex with its closest gt
/// surface point, and averages the per-vertex errors. KL is KL(gt || pred + 1e-8).
SkinMetrics skin_metrics(const Rig& pred, const Rig& gt, const Eigen::MatrixXd& plan);

enum class Alignment { None, Icp };

struct EvalSettings {
  Alignment align = Alignment::Icp;
  IcpOptions icp;
  int samples_per_bone = kDefaultSamplesPerBone;
  std::optional<double> epsilon;  // Wasserstein regularization; default from the cost
  GwOptions gw;
  // Maximum number of mesh vertices fed to ICP when a skeleton is too small.
  int icp_max_mesh_points = 256;
};

struct MetricReport {
  double joint_to_joint = 0.0;
  double joint_to_bone = 0.0;
  double bone_to_bone = 0.0;
  double wasserstein = 0.0;
  double gromov_wasserstein = 0.0;
  std::optional<double> skin_l1;
  std::optional<double> skin_l2;
  std::optional<double> skin_kl;
  RigidTransform alignment;  // applied to the normalized prediction
  double icp_residual = 0.0;
};

/// Normalizes both rigs, rescales the prediction to the reference's surface
/// RMS radius, aligns it (optionally by ICP) and computes every metric.
MetricReport evaluate(const Rig& pred, const Rig& gt, const EvalSettings& settings = {});

/// Area-weighted RMS distance of a mesh surface from its area centroid (vertex
/// RMS when the mesh has no area).
double surface_rms_radius(const Mesh& mesh, Vec3* centroid = nullptr);

Json report_to_json(const MetricReport& report);
MetricReport report_from_json(const Json& doc);

/// Column titles in table order.
const std::vector<std::string>& metric_columns();
/// Values in table order; missing skin entries are NaN.
std::vector<double> metric_values(const MetricReport& report);
/// Aligned plain-text table, one row per (label, report).
std::string metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows);
/// Column-wise mean; a skin column averages only the reports that have it.
MetricReport mean_report(const std::vector<MetricReport>& reports);

struct TopologyMatch {
  bool exact = false;              // bijective nearest matching with identical parent links
  double max_position_error = 0.0; // over matched joints
  std::vector<int> mapping;        // recovered joint -> reference joint
};

/// Compares a recovered skeleton with a reference by nearest-joint matching.
TopologyMatch match_topology(const Skeleton& recovered, const Skeleton& reference);

}  // namespace rigfield
