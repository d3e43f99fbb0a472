#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "rigfield/animate.hpp"
#include "rigfield/bvh.hpp"
#include "rigfield/error.hpp"
#include "rigfield/metrics.hpp"
#include "rigfield/rig_io.hpp"
#include "rigfield/skeleton_field.hpp"
#include "rigfield/skin_field.hpp"
#include "rigfield/syngen.hpp"
#include "rigfield/voxelize.hpp"

namespace fs = std::filesystem;
using namespace rigfield;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 1;
    case ErrorKind::Parse:
    case ErrorKind::Validation:
      return 2;
    case ErrorKind::Numeric:
      return 3;
  }
  return 2;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

Skeleton nonempty_skeleton(const Rig& rig) {
  require(!rig.skeleton.joints.empty(), "rig has an empty skeleton");
  return rig.skeleton;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------

struct VoxelizeArgs {
  std::string input, out_dir;
  int resolution = 64;
  int dilate = kDefaultSkeletonDilation;
};

void cmd_voxelize(const VoxelizeArgs& a) {
  const Rig rig = normalize_rig(load_rig(a.input)).rig;
  const SparseVoxelGrid surface = voxelize_surface(rig.mesh, a.resolution);
  const SparseVoxelGrid skeleton = voxelize_skeleton(nonempty_skeleton(rig), a.resolution, a.dilate);
  make_dir(a.out_dir);
  write_json(grid_to_json(surface), fs::path(a.out_dir) / "surface_grid.json");
  write_json(grid_to_json(skeleton), fs::path(a.out_dir) / "skeleton_grid.json");
  std::cout << "surface voxels: " << surface.size() << "\nskeleton voxels: " << skeleton.size() << "\n";
}

struct EncodeArgs {
  std::string input, out;
  int resolution = kDefaultSkeletonResolution;
  int dilate = kDefaultSkeletonDilation;
};

void cmd_encode(const EncodeArgs& a) {
  const Rig rig = normalize_rig(load_rig(a.input)).rig;
  const Skeleton skel = nonempty_skeleton(rig);
  const SkeletonField field = encode_field(skel, voxelize_skeleton(skel, a.resolution, a.dilate));
  write_json(field_to_json(field), a.out);
  std::cout << "field samples: " << field.samples.size() << "\n";
}

struct DecodeArgs {
  std::string input, out;
  double bandwidth = 2.0;
  int min_cluster_size = 3;
};

void cmd_decode(const DecodeArgs& a) {
  const SkeletonField field = field_from_json(read_json(a.input));
  ClusterParams params = ClusterParams::for_resolution(field.grid.resolution(), a.bandwidth);
  params.min_cluster_size = a.min_cluster_size;
  const Skeleton skel = decode_skeleton(field, params);
  write_json(skeleton_to_json(skel), a.out);
  std::cout << "joints: " << skel.size() << "\n";
}

struct RoundtripArgs {
  std::string input, out_dir;
  int resolution = kDefaultSkeletonResolution;
  int dilate = kDefaultSkeletonDilation;
  double bandwidth = 2.0;
  double noise = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
};

void cmd_roundtrip(const RoundtripArgs& a) {
  require(a.trials >= 1, "trials must be at least 1");
  require(a.noise >= 0.0, "noise must be nonnegative");
  const Rig rig = normalize_rig(load_rig(a.input)).rig;
  const Skeleton skel = nonempty_skeleton(rig);
  const SkeletonField clean = encode_field(skel, voxelize_skeleton(skel, a.resolution, a.dilate));
  const ClusterParams params = ClusterParams::for_resolution(a.resolution, a.bandwidth);
  const double edge = 1.0 / a.resolution;

  Json trials = Json::array();
  int exact = 0;
  Skeleton first;
  for (int t = 0; t < a.trials; ++t) {
    SkeletonField field = clean;
    add_offset_noise(field, a.noise * edge, a.seed + static_cast<std::uint64_t>(t));
    Json entry = {{"trial", t}, {"seed", a.seed + static_cast<std::uint64_t>(t)}};
    try {
      const Skeleton rec = decode_skeleton(field, params);
      if (t == 0) first = rec;
      const TopologyMatch m = match_topology(rec, skel);
      const ChamferMetrics c = chamfer_metrics(rec, skel);
      entry["joints"] = rec.size();
      entry["topology_exact"] = m.exact;
      entry["max_position_error_edges"] = m.max_position_error / edge;
      entry["joint_to_joint"] = c.joint_to_joint;
      entry["joint_to_joint_edges"] = c.joint_to_joint / edge;
      entry["joint_to_bone"] = c.joint_to_bone;
      entry["bone_to_bone"] = c.bone_to_bone;
      entry["gromov_wasserstein"] = gromov_wasserstein(rec, skel).distance;
      if (m.exact) ++exact;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Validation) throw;
      entry["joints"] = 0;
      entry["topology_exact"] = false;
      entry["error"] = e.what();
    }
    trials.push_back(std::move(entry));
  }

  Json report = {{"input", a.input},
                 {"resolution", a.resolution},
                 {"dilation", a.dilate},
                 {"bandwidth_edges", a.bandwidth},
                 {"noise_edges", a.noise},
                 {"seed", a.seed},
                 {"trials", a.trials},
                 {"reference_joints", skel.size()},
                 {"topology_exact_count", exact},
                 {"topology_exact_fraction", static_cast<double>(exact) / a.trials},
                 {"results", trials}};
  make_dir(a.out_dir);
  write_json(skeleton_to_json(first), fs::path(a.out_dir) / "recovered_skeleton.json");
  write_json(report, fs::path(a.out_dir) / "roundtrip_report.json");
  std::cout << "topology exact: " << exact << "/" << a.trials << "\n";
  if (!trials[0].contains("error"))
    std::cout << "trial 0: joints " << trials[0]["joints"] << ", j2j " << trials[0]["joint_to_joint_edges"].get<double>()
              << " edges, exact " << (trials[0]["topology_exact"].get<bool>() ? "true" : "false") << "\n";
}

struct TransferArgs {
  std::string source, target, out, method = "bvh";
  bool bench = false;
};

void bench_transfer(const Mesh& src, const Mesh& dst) {
  const auto t0 = Clock::now();
  const TriangleBvh bvh = TriangleBvh::build(src);
  const double build = seconds_since(t0);
  const double nq = static_cast<double>(dst.vertices.size());

  auto t1 = Clock::now();
  double sink = 0.0;
  for (const Vec3& q : dst.vertices) sink += bvh.closest_point(q).squared_distance;
  const double t_bvh = seconds_since(t1);

  t1 = Clock::now();
  for (const Vec3& q : dst.vertices) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& v : src.vertices) best = std::min(best, (q - v).squaredNorm());
    sink += best;
  }
  const double t_nn = seconds_since(t1);

  t1 = Clock::now();
  for (const Vec3& q : dst.vertices) sink += closest_point_brute_force(src, q).squared_distance;
  const double t_brute = seconds_since(t1);

  std::printf("bench: %zu triangles, %zu queries (checksum %.6g)\n", src.triangles.size(), dst.vertices.size(), sink);
  std::printf("  bvh build          %10.3f ms\n", 1e3 * build);
  std::printf("  bvh closest point  %10.3f us/query\n", 1e6 * t_bvh / nq);
  std::printf("  nearest vertex     %10.3f us/query\n", 1e6 * t_nn / nq);
  std::printf("  brute force        %10.3f us/query\n", 1e6 * t_brute / nq);
  std::printf("  bvh speedup over brute force: %.1fx\n", t_brute / std::max(t_bvh, 1e-12));
}

void cmd_transfer(const TransferArgs& a) {
  const Rig src = load_rig(a.source);
  require(src.skin.has_value(), "source rig has no skin");
  const Rig dst_in = load_rig(a.target);
  Rig out;
  out.mesh = dst_in.mesh;
  out.skeleton = src.skeleton;
  out.skin = a.method == "bvh" ? transfer_skin_bvh(src, out.mesh) : transfer_skin_nn(src, out.mesh);
  validate(out);
  save_rig(out, a.out);
  std::cout << "transferred skin to " << out.mesh.vertices.size() << " vertices (" << a.method << ")\n";
  if (a.bench) bench_transfer(src.mesh, out.mesh);
}

struct PerturbArgs {
  std::string input, out_rig, out_pose;
  double prob = kDefaultPerturbProbability;
  double max_deg = kDefaultPerturbMaxDegrees;
  std::uint64_t seed = 0;
};

void cmd_perturb(const PerturbArgs& a) {
  const Rig rig = load_rig(a.input);
  require(rig.skin.has_value(), "rig has no skin to deform with");
  const Pose pose = perturb_pose(rig.skeleton, a.prob, a.max_deg, a.seed);
  Rig posed = rig;
  posed.mesh = skin_mesh(rig, pose);
  posed.skeleton = pose_skeleton(rig.skeleton, pose);
  save_rig(posed, a.out_rig);
  Json doc = pose_to_json(pose);
  doc["seed"] = a.seed;
  doc["probability"] = a.prob;
  doc["max_degrees"] = a.max_deg;
  write_json(doc, a.out_pose);
  std::size_t moved = 0;
  for (const auto& q : pose.rotations)
    if (!q.coeffs().isApprox(Eigen::Quaterniond::Identity().coeffs(), 0.0)) ++moved;
  std::cout << "rotated joints: " << moved << "/" << pose.rotations.size() << " (seed " << a.seed << ")\n";
}

struct EvalArgs {
  std::string pred, gt, out, table, align = "icp";
  int restarts = kDefaultIcpRestarts;
  std::uint64_t seed = 0;
  int jobs = 1;
};

std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pair_inputs(const EvalArgs& a) {
  const fs::path pred(a.pred), gt(a.gt);
  if (!fs::exists(pred)) throw Error(ErrorKind::Io, "no such file or directory: " + a.pred);
  if (!fs::exists(gt)) throw Error(ErrorKind::Io, "no such file or directory: " + a.gt);
  if (!fs::is_directory(pred) && !fs::is_directory(gt)) return {{pred.stem().string(), {pred, gt}}};
  require(fs::is_directory(pred) && fs::is_directory(gt), "pred and gt must both be files or both be directories");
  auto list = [](const fs::path& dir) {
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".json") out[e.path().stem().string()] = e.path();
    return out;
  };
  const auto p = list(pred), g = list(gt);
  require(p.size() == g.size(), "pred has " + std::to_string(p.size()) + " rigs but gt has " + std::to_string(g.size()));
  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> out;
  for (const auto& [stem, path] : p) {
    const auto it = g.find(stem);
    require(it != g.end(), "no gt rig named " + stem);
    out.push_back({stem, {path, it->second}});
  }
  require(!out.empty(), "no rig pairs to evaluate");
  return out;
}

int cmd_eval(const EvalArgs& a) {
  require(a.jobs >= 1, "jobs must be at least 1");
  const auto pairs = pair_inputs(a);
  EvalSettings settings;
  settings.align = a.align == "icp" ? Alignment::Icp : Alignment::None;
  settings.icp.restarts = a.restarts;
  settings.icp.seed = a.seed;

  struct Outcome {
    std::optional<MetricReport> report;
    std::string error;
    int code = 0;
  };
  std::vector<Outcome> results(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        results[i].report = evaluate(load_rig(pairs[i].second.first), load_rig(pairs[i].second.second), settings);
      } catch (const Error& e) {
        results[i].error = e.what();
        results[i].code = exit_code(e.kind());
      } catch (const Json::exception& e) {
        results[i].error = e.what();
        results[i].code = 2;
      } catch (const std::exception& e) {
        results[i].error = e.what();
        results[i].code = 3;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min<int>(a.jobs, static_cast<int>(pairs.size()));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Json per_pair = Json::array();
  std::vector<std::pair<std::string, MetricReport>> rows;
  std::vector<MetricReport> ok;
  int code = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Json entry = {{"name", pairs[i].first}};
    if (results[i].report) {
      entry["metrics"] = report_to_json(*results[i].report);
      rows.emplace_back(pairs[i].first, *results[i].report);
      ok.push_back(*results[i].report);
    } else {
      entry["error"] = results[i].error;
      std::cerr << pairs[i].first << ": " << results[i].error << "\n";
      if (code == 0) code = results[i].code;
    }
    per_pair.push_back(std::move(entry));
  }
  const MetricReport mean = mean_report(ok);
  if (!ok.empty()) rows.emplace_back("mean", mean);
  Json doc = {{"align", a.align},
              {"icp_restarts", a.restarts},
              {"seed", a.seed},
              {"pairs", per_pair},
              {"evaluated", ok.size()},
              {"failed", pairs.size() - ok.size()}};
  if (!ok.empty()) {
    Json m = report_to_json(mean);
    m.erase("alignment");
    m.erase("icp_residual");
    doc["mean"] = m;
  }
  const std::string table = metric_table(rows);
  if (!a.out.empty()) write_json(doc, a.out);
  if (!a.table.empty()) write_text(table, a.table);
  std::cout << table;
  return code;
}

struct FitArgs {
  std::string input, out;
  FitConfig config;
};

void cmd_fit(const FitArgs& a) {
  const Rig rig = load_rig(a.input);
  require(rig.skin.has_value(), "rig has no skin to fit");
  const FitResult fit = fit_skin_embeddings(*rig.skin, rig.skeleton, a.config);
  Json doc = embeddings_to_json(fit.embeddings);
  doc["fit"] = {{"final_loss", fit.final_loss}, {"iterations", fit.iterations_run}, {"seed", a.config.seed}};
  write_json(doc, a.out);
  const Eigen::MatrixXd decoded = decode_skin_dense(fit.embeddings);
  const double l1 = (decoded - rig.skin->dense()).cwiseAbs().rowwise().sum().mean();
  std::printf("final KL %.6g, mean l1 %.6g after %d iterations\n", fit.final_loss, l1, fit.iterations_run);
}

struct SyngenArgs {
  SynthSpec spec;
  std::string family = "chain", mesh = "capsule", corruption, out;
  bool no_skin = false;
  double magnitude = 0.01;
  std::uint64_t corrupt_seed = 0;
};

void cmd_syngen(SyngenArgs a) {
  a.spec.family = family_from_string(a.family);
  a.spec.mesh = mesh_style_from_string(a.mesh);
  a.spec.skin = !a.no_skin;
  Rig rig = generate(a.spec);
  if (!a.corruption.empty()) rig = corrupt(rig, corruption_from_string(a.corruption), a.magnitude, a.corrupt_seed);
  save_rig(rig, a.out);
  std::cout << "joints: " << rig.skeleton.size() << ", vertices: " << rig.mesh.vertices.size()
            << ", triangles: " << rig.mesh.triangles.size() << " (seed " << a.spec.seed << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigfield: shape, skeleton and skin fields for rigged meshes"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  VoxelizeArgs vox;
  auto* c_vox = app.add_subcommand("voxelize", "Write surface and skeleton voxel grids of a normalized rig");
  c_vox->add_option("--input", vox.input, "Rig JSON")->required();
  c_vox->add_option("--resolution", vox.resolution, "Grid resolution N (N^3 voxels, at least 8)")->capture_default_str();
  c_vox->add_option("--dilate", vox.dilate, "Skeleton dilation radius in voxels")->capture_default_str();
  c_vox->add_option("--out-dir", vox.out_dir, "Output directory")->required();

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode-field", "Encode a rig's skeleton as a sparse skeleton field");
  c_enc->add_option("--input", enc.input, "Rig JSON")->required();
  c_enc->add_option("--resolution", enc.resolution, "Grid resolution")->capture_default_str();
  c_enc->add_option("--dilate", enc.dilate, "Skeleton dilation radius in voxels")->capture_default_str();
  c_enc->add_option("--out", enc.out, "Field JSON")->required();

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode-skeleton", "Cluster a skeleton field back into a skeleton");
  c_dec->add_option("--input", dec.input, "Field JSON")->required();
  c_dec->add_option("--bandwidth", dec.bandwidth, "Mean-shift bandwidth in voxel edges")->capture_default_str();
  c_dec->add_option("--min-cluster-size", dec.min_cluster_size, "Smallest cluster kept")->capture_default_str();
  c_dec->add_option("--out", dec.out, "Skeleton JSON")->required();

  RoundtripArgs rt;
  auto* c_rt = app.add_subcommand("roundtrip", "Encode, optionally corrupt, and decode a skeleton field");
  c_rt->add_option("--input", rt.input, "Rig JSON")->required();
  c_rt->add_option("--resolution", rt.resolution, "Grid resolution")->capture_default_str();
  c_rt->add_option("--dilate", rt.dilate, "Skeleton dilation radius in voxels")->capture_default_str();
  c_rt->add_option("--bandwidth", rt.bandwidth, "Mean-shift bandwidth in voxel edges")->capture_default_str();
  c_rt->add_option("--noise", rt.noise, "Offset noise sigma in voxel edges")->capture_default_str();
  c_rt->add_option("--trials", rt.trials, "Number of seeded trials")->capture_default_str();
  c_rt->add_option("--seed", rt.seed, "Seed of the first trial")->capture_default_str();
  c_rt->add_option("--out-dir", rt.out_dir, "Output directory")->required();

  TransferArgs tr;
  auto* c_tr = app.add_subcommand("transfer-skin", "Transfer skin weights from a rig onto another mesh");
  c_tr->add_option("--source", tr.source, "Rig JSON with skin")->required();
  c_tr->add_option("--target", tr.target, "Rig JSON whose mesh receives the skin")->required();
  c_tr->add_option("--out", tr.out, "Output rig JSON")->required();
  c_tr->add_option("--method", tr.method, "bvh (barycentric on closest surface point) or nn (nearest vertex)")
      ->check(CLI::IsMember({"bvh", "nn"}))
      ->capture_default_str();
  c_tr->add_flag("--bench", tr.bench, "Print per-query timings of BVH, nearest vertex and brute force");

  PerturbArgs pt;
  auto* c_pt = app.add_subcommand("perturb", "Sample a random pose and deform the rig with it");
  c_pt->add_option("--input", pt.input, "Rig JSON with skin")->required();
  c_pt->add_option("--prob", pt.prob, "Probability that a joint is rotated")->capture_default_str();
  c_pt->add_option("--max-deg", pt.max_deg, "Maximum rotation angle in degrees")->capture_default_str();
  c_pt->add_option("--seed", pt.seed, "Random seed")->capture_default_str();
  c_pt->add_option("--out-rig", pt.out_rig, "Posed rig JSON")->required();
  c_pt->add_option("--out-pose", pt.out_pose, "Pose JSON")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Compare predicted rigs with reference rigs");
  c_ev->add_option("--pred", ev.pred, "Predicted rig JSON or directory")->required();
  c_ev->add_option("--gt", ev.gt, "Reference rig JSON or directory (paired by file stem)")->required();
  c_ev->add_option("--align", ev.align, "Pre-alignment: icp or none")
      ->check(CLI::IsMember({"icp", "none"}))
      ->capture_default_str();
  c_ev->add_option("--icp-restarts", ev.restarts, "Random-rotation ICP restarts")->capture_default_str();
  c_ev->add_option("--seed", ev.seed, "ICP seed")->capture_default_str();
  c_ev->add_option("--jobs", ev.jobs, "Pairs evaluated in parallel")->capture_default_str();
  c_ev->add_option("--out", ev.out, "Report JSON");
  c_ev->add_option("--table", ev.table, "Plain-text table");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-skin", "Fit dual skin-field embeddings to a rig's skin");
  c_fit->add_option("--input", fit.input, "Rig JSON with skin")->required();
  c_fit->add_option("--out", fit.out, "Embeddings JSON")->required();
  c_fit->add_option("--channels", fit.config.channels, "Embedding channels")->capture_default_str();
  c_fit->add_option("--lifted-dim", fit.config.lifted_dim, "Lifted dimension")->capture_default_str();
  c_fit->add_flag("--identity-lift", fit.config.identity_lift, "Use fixed identity lifts");
  c_fit->add_option("--iterations", fit.config.iterations, "Gradient steps")->capture_default_str();
  c_fit->add_option("--learning-rate", fit.config.learning_rate, "Step size")->capture_default_str();
  c_fit->add_option("--clip-norm", fit.config.clip_norm, "Gradient norm clip")->capture_default_str();
  c_fit->add_option("--seed", fit.config.seed, "Initialization seed")->capture_default_str();

  SyngenArgs sg;
  auto* c_sg = app.add_subcommand("syngen", "Generate a synthetic rig");
  c_sg->add_option("--family", sg.family, "chain, star, tree or quadruped")->capture_default_str();
  c_sg->add_option("--joints", sg.spec.joint_count, "Joint count (ignored for quadruped)")->capture_default_str();
  c_sg->add_option("--roots", sg.spec.root_count, "Number of trees")->capture_default_str();
  c_sg->add_option("--bone-min", sg.spec.bone_min, "Shortest bone before normalization")->capture_default_str();
  c_sg->add_option("--bone-max", sg.spec.bone_max, "Longest bone before normalization")->capture_default_str();
  c_sg->add_option("--min-separation", sg.spec.min_separation, "Minimum joint spacing")->capture_default_str();
  c_sg->add_option("--mesh", sg.mesh, "capsule or sphere")->capture_default_str();
  c_sg->add_option("--radius", sg.spec.radius, "Capsule radius")->capture_default_str();
  c_sg->add_option("--segments", sg.spec.segments, "Segments around each capsule")->capture_default_str();
  c_sg->add_option("--falloff", sg.spec.falloff, "Skin falloff distance")->capture_default_str();
  c_sg->add_flag("--no-skin", sg.no_skin, "Omit skin weights");
  c_sg->add_option("--seed", sg.spec.seed, "Random seed")->capture_default_str();
  c_sg->add_option("--corrupt", sg.corruption, "insert-mid-bone, duplicate-branch, delete-branch or jitter-joints");
  c_sg->add_option("--magnitude", sg.magnitude, "Corruption magnitude")->capture_default_str();
  c_sg->add_option("--corrupt-seed", sg.corrupt_seed, "Corruption seed")->capture_default_str();
  c_sg->add_option("--out", sg.out, "Output rig JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_vox->parsed()) cmd_voxelize(vox);
    if (c_enc->parsed()) cmd_encode(enc);
    if (c_dec->parsed()) cmd_decode(dec);
    if (c_rt->parsed()) cmd_roundtrip(rt);
    if (c_tr->parsed()) cmd_transfer(tr);
    if (c_pt->parsed()) cmd_perturb(pt);
    if (c_ev->parsed()) return cmd_eval(ev);
    if (c_fit->parsed()) cmd_fit(fit);
    if (c_sg->parsed()) cmd_syngen(sg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
