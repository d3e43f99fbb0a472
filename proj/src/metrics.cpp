#include "rigfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rigfield/bvh.hpp"
#include "rigfield/error.hpp"

namespace rigfield {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

struct Segment {
  Vec3 a, b;
};

std::vector<Segment> bones_of(const Skeleton& s) {
  std::vector<Segment> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out.push_back({s.joints[i], s.is_root(i) ? s.joints[i] : s.joints[static_cast<std::size_t>(s.parents[i])]});
  return out;
}

Points bone_samples(const Skeleton& s, int per_bone) {
  Points out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.is_root(i)) {
      out.push_back(s.joints[i]);
      continue;
    }
    const Vec3& a = s.joints[i];
    const Vec3& b = s.joints[static_cast<std::size_t>(s.parents[i])];
    for (int k = 0; k < per_bone; ++k) {
      const double t = static_cast<double>(k) / (per_bone - 1);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

double mean_nn(const Points& from, const Points& to) {
  double sum = 0.0;
  for (const Vec3& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.size());
}

double mean_to_bones(const Points& from, const std::vector<Segment>& bones) {
  double sum = 0.0;
  for (const Vec3& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Segment& s : bones) best = std::min(best, point_segment_distance(p, s.a, s.b));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

ChamferMetrics chamfer_metrics(const Skeleton& pred, const Skeleton& gt, int samples_per_bone) {
  require(!pred.joints.empty() && !gt.joints.empty(), "Chamfer metrics need two non-empty skeletons");
  require(samples_per_bone >= 2, "samples_per_bone must be at least 2");
  validate(pred);
  validate(gt);
  ChamferMetrics m;
  m.joint_to_joint = 0.5 * (mean_nn(pred.joints, gt.joints) + mean_nn(gt.joints, pred.joints));
  m.joint_to_bone = 0.5 * (mean_to_bones(pred.joints, bones_of(gt)) + mean_to_bones(gt.joints, bones_of(pred)));
  const Points sp = bone_samples(pred, samples_per_bone), sg = bone_samples(gt, samples_per_bone);
  m.bone_to_bone = 0.5 * (mean_nn(sp, sg) + mean_nn(sg, sp));
  return m;
}

SkinMetrics skin_metrics(const Rig& pred, const Rig& gt, const Eigen::MatrixXd& plan) {
  require(pred.skin.has_value() && gt.skin.has_value(), "skin metrics need skin on both rigs");
  const auto n = static_cast<Eigen::Index>(pred.skeleton.size());
  const auto m = static_cast<Eigen::Index>(gt.skeleton.size());
  require(plan.rows() == n && plan.cols() == m, "transport plan shape does not match the skeletons");
  require(plan.allFinite() && (plan.array() >= 0.0).all(), "transport plan must be finite and nonnegative");
  Eigen::MatrixXd push = plan;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = push.row(i).sum();
    require(r > 0.0, "transport plan has an empty row");
    push.row(i) /= r;
  }

  // Reference weights at each predicted vertex.
  const SkinWeights ref = transfer_skin_bvh(gt, pred.mesh);
  const Eigen::MatrixXd wp = pred.skin->dense() * push;  // vertices x gt joints
  const Eigen::MatrixXd wg = ref.dense();

  SkinMetrics out;
  const auto nv = wp.rows();
  require(nv > 0, "skin metrics need at least one vertex");
  for (Eigen::Index v = 0; v < nv; ++v) {
    const Eigen::VectorXd d = wp.row(v) - wg.row(v);
    out.l1 += d.cwiseAbs().sum();
    out.l2 += d.norm();
    double kl = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double g = wg(v, k);
      if (g > 0.0) kl += g * std::log(g / (wp(v, k) + 1e-8));
    }
    out.kl += std::max(0.0, kl);
  }
  out.l1 /= static_cast<double>(nv);
  out.l2 /= static_cast<double>(nv);
  out.kl /= static_cast<double>(nv);
  return out;
}

double surface_rms_radius(const Mesh& mesh, Vec3* centroid) {
  require(!mesh.vertices.empty(), "RMS radius of an empty mesh");
  // Second moment of each triangle about the origin, exact for linear densities.
  double area = 0.0;
  Vec3 first = Vec3::Zero();
  double second = 0.0;
  for (const Triangle& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const double ar = 0.5 * (b - a).cross(c - a).norm();
    if (ar == 0.0) continue;
    area += ar;
    first += ar * (a + b + c) / 3.0;
    second += ar * (a.squaredNorm() + b.squaredNorm() + c.squaredNorm() + a.dot(b) + b.dot(c) + c.dot(a)) / 6.0;
  }
  Vec3 c;
  double ms;
  if (area > 0.0) {
    c = first / area;
    ms = second / area - c.squaredNorm();
  } else {
    c = Vec3::Zero();
    for (const Vec3& p : mesh.vertices) c += p;
    c /= static_cast<double>(mesh.vertices.size());
    ms = 0.0;
    for (const Vec3& p : mesh.vertices) ms += (p - c).squaredNorm();
    ms /= static_cast<double>(mesh.vertices.size());
  }
  if (centroid) *centroid = c;
  return std::sqrt(std::max(0.0, ms));
}

namespace {

Points subsample(const Points& pts, int max_points) {
  if (static_cast<int>(pts.size()) <= max_points) return pts;
  Points out;
  const double stride = static_cast<double>(pts.size()) / max_points;
  for (int k = 0; k < max_points; ++k) out.push_back(pts[static_cast<std::size_t>(k * stride)]);
  return out;
}

}  // namespace

MetricReport evaluate(const Rig& pred_in, const Rig& gt_in, const EvalSettings& settings) {
  validate(pred_in);
  validate(gt_in);
  require(!pred_in.skeleton.joints.empty() && !gt_in.skeleton.joints.empty(), "evaluation needs two skeletons");
  const Rig gt = normalize_rig(gt_in).rig;
  Rig pred = normalize_rig(pred_in).rig;

  // Box normalization depends on orientation; match the rotation-invariant
  // surface radius instead.
  Vec3 pc;
  const double rp = surface_rms_radius(pred.mesh, &pc);
  const double rg = surface_rms_radius(gt.mesh);
  if (rp > 0.0 && rg > 0.0) {
    Normalization s;
    s.scale = rg / rp;
    s.offset = -pc;
    apply(s, pred);
    for (Vec3& v : pred.mesh.vertices) v += pc;
    for (Vec3& j : pred.skeleton.joints) j += pc;
  }

  MetricReport report;
  if (settings.align == Alignment::Icp) {
    const bool joints = pred.skeleton.size() >= 3 && gt.skeleton.size() >= 3;
    const Points src = joints ? pred.skeleton.joints : subsample(pred.mesh.vertices, settings.icp_max_mesh_points);
    const Points dst = joints ? gt.skeleton.joints : subsample(gt.mesh.vertices, settings.icp_max_mesh_points);
    const IcpResult icp = align_icp(src, dst, settings.icp);
    report.alignment = icp.transform;
    report.icp_residual = icp.residual;
    pred = apply(icp.transform, pred);
  }

  const ChamferMetrics c = chamfer_metrics(pred.skeleton, gt.skeleton, settings.samples_per_bone);
  report.joint_to_joint = c.joint_to_joint;
  report.joint_to_bone = c.joint_to_bone;
  report.bone_to_bone = c.bone_to_bone;
  const WassersteinResult w = wasserstein(pred.skeleton.joints, gt.skeleton.joints, settings.epsilon);
  report.wasserstein = w.distance;
  report.gromov_wasserstein = gromov_wasserstein(pred.skeleton, gt.skeleton, settings.gw).distance;
  if (pred.skin && gt.skin) {
    const SkinMetrics s = skin_metrics(pred, gt, w.plan.plan);
    report.skin_l1 = s.l1;
    report.skin_l2 = s.l2;
    report.skin_kl = s.kl;
  }
  for (double v : metric_values(report))
    if (!std::isnan(v) && !(std::isfinite(v) && v >= 0.0)) throw Error(ErrorKind::Numeric, "metric is not finite");
  return report;
}

Json report_to_json(const MetricReport& r) {
  Json j;
  j["joint_to_joint"] = r.joint_to_joint;
  j["joint_to_bone"] = r.joint_to_bone;
  j["bone_to_bone"] = r.bone_to_bone;
  j["wasserstein"] = r.wasserstein;
  j["gromov_wasserstein"] = r.gromov_wasserstein;
  if (r.skin_l1) j["skin_l1"] = *r.skin_l1;
  if (r.skin_l2) j["skin_l2"] = *r.skin_l2;
  if (r.skin_kl) j["skin_kl"] = *r.skin_kl;
  Json rot = Json::array();
  for (int i = 0; i < 3; ++i) rot.push_back({r.alignment.rotation(i, 0), r.alignment.rotation(i, 1), r.alignment.rotation(i, 2)});
  j["alignment"] = {{"rotation", rot}, {"translation", to_json(r.alignment.translation)}};
  j["icp_residual"] = r.icp_residual;
  return j;
}

MetricReport report_from_json(const Json& j) {
  try {
    MetricReport r;
    r.joint_to_joint = j.at("joint_to_joint").get<double>();
    r.joint_to_bone = j.at("joint_to_bone").get<double>();
    r.bone_to_bone = j.at("bone_to_bone").get<double>();
    r.wasserstein = j.at("wasserstein").get<double>();
    r.gromov_wasserstein = j.at("gromov_wasserstein").get<double>();
    if (j.contains("skin_l1")) r.skin_l1 = j.at("skin_l1").get<double>();
    if (j.contains("skin_l2")) r.skin_l2 = j.at("skin_l2").get<double>();
    if (j.contains("skin_kl")) r.skin_kl = j.at("skin_kl").get<double>();
    if (j.contains("alignment")) {
      const Json& a = j.at("alignment");
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.alignment.rotation(i, k) = a.at("rotation").at(i).at(k).get<double>();
      r.alignment.translation = vec3_from_json(a.at("translation"));
    }
    if (j.contains("icp_residual")) r.icp_residual = j.at("icp_residual").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad metric report: ") + e.what());
  }
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"Joint-to-Joint",     "Joint-to-Bone", "Bone-to-Bone",
                                             "Wasserstein",        "Gromov–Wasserstein", "Skin ℓ1",
                                             "Skin ℓ2",            "Skin KL"};
  return cols;
}

std::vector<double> metric_values(const MetricReport& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {r.joint_to_joint,   r.joint_to_bone, r.bone_to_bone, r.wasserstein, r.gromov_wasserstein,
          r.skin_l1.value_or(nan), r.skin_l2.value_or(nan), r.skin_kl.value_or(nan)};
}

namespace {

// Display width of a UTF-8 string (one column per code point).
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++w;
  return w;
}

std::string pad(const std::string& s, std::size_t w) { return std::string(w > width(s) ? w - width(s) : 0, ' ') + s; }

}  // namespace

std::string metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Asset"};
  for (const auto& c : metric_columns()) header.push_back(c);
  cells.push_back(header);
  for (const auto& [label, rep] : rows) {
    std::vector<std::string> line{label};
    for (double v : metric_values(rep)) {
      if (std::isnan(v)) {
        line.emplace_back("-");
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", v);
      line.emplace_back(buf);
    }
    cells.push_back(line);
  }
  std::vector<std::size_t> w(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) w[c] = std::max(w[c], width(line[c]));
  std::ostringstream os;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0)
        os << line[c] << std::string(w[0] - width(line[0]), ' ');
      else
        os << "  " << pad(line[c], w[c]);
    }
    os << '\n';
  }
  return os.str();
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport out;
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  double l1 = 0, l2 = 0, kl = 0;
  int skins = 0;
  for (const MetricReport& r : reports) {
    out.joint_to_joint += r.joint_to_joint / n;
    out.joint_to_bone += r.joint_to_bone / n;
    out.bone_to_bone += r.bone_to_bone / n;
    out.wasserstein += r.wasserstein / n;
    out.gromov_wasserstein += r.gromov_wasserstein / n;
    if (r.skin_l1 && r.skin_l2 && r.skin_kl) {
      l1 += *r.skin_l1;
      l2 += *r.skin_l2;
      kl += *r.skin_kl;
      ++skins;
    }
  }
  if (skins > 0) {
    out.skin_l1 = l1 / skins;
    out.skin_l2 = l2 / skins;
    out.skin_kl = kl / skins;
  }
  return out;
}

TopologyMatch match_topology(const Skeleton& recovered, const Skeleton& reference) {
  TopologyMatch m;
  m.mapping.assign(recovered.size(), -1);
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < reference.size(); ++k) {
      const double d = (recovered.joints[i] - reference.joints[k]).norm();
      if (d < best) {
        best = d;
        m.mapping[i] = static_cast<int>(k);
      }
    }
    if (m.mapping[i] >= 0) m.max_position_error = std::max(m.max_position_error, best);
  }
  if (recovered.size() != reference.size() || recovered.joints.empty()) return m;
  std::vector<int> inverse(reference.size(), -1);
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    if (inverse[m.mapping[i]] >= 0) return m;
    inverse[m.mapping[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    const int p = recovered.parents[i];
    const int expect = reference.parents[m.mapping[i]];
    if ((p < 0) != (expect < 0)) return m;
    if (p >= 0 && m.mapping[p] != expect) return m;
  }
  m.exact = true;
  return m;
}

}  // namespace rigfield
