#include "rigfield/rig_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rigfield/error.hpp"

namespace rigfield {

double round_sig9(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return std::strtod(buf, nullptr);
}

Json to_json(const Vec3& p) { return Json::array({round_sig9(p.x()), round_sig9(p.y()), round_sig9(p.z())}); }

Vec3 vec3_from_json(const Json& j) {
  require(j.is_array() && j.size() == 3, "expected a 3-element coordinate array");
  for (const Json& c : j) require(c.is_number(), "coordinate is not a number");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_json(const Json& doc, const std::filesystem::path& path) { write_text(doc.dump() + "\n", path); }

Json rig_to_json(const Rig& rig) {
  Json vertices = Json::array();
  for (const Vec3& v : rig.mesh.vertices) vertices.push_back(to_json(v));
  Json triangles = Json::array();
  for (const Triangle& t : rig.mesh.triangles) triangles.push_back({t[0], t[1], t[2]});
  Json joints = Json::array();
  for (const Vec3& j : rig.skeleton.joints) joints.push_back(to_json(j));

  Json doc = {
      {"version", 1},
      {"mesh", {{"vertices", std::move(vertices)}, {"triangles", std::move(triangles)}}},
      {"skeleton", {{"joints", std::move(joints)}, {"parents", rig.skeleton.parents}}},
  };
  if (rig.skin) {
    Json entries = Json::array();
    for (const auto& row : rig.skin->entries) {
      Json r = Json::array();
      for (const Influence& inf : row) r.push_back({inf.joint, round_sig9(inf.weight)});
      entries.push_back(std::move(r));
    }
    doc["skin"] = {{"entries", std::move(entries)}};
  }
  return doc;
}

namespace {

const Json& member(const Json& obj, const char* key) {
  require(obj.is_object() && obj.contains(key), std::string("missing key \"") + key + "\"");
  return obj.at(key);
}

int int_from_json(const Json& j, const char* what) {
  require(j.is_number_integer(), std::string(what) + " is not an integer");
  return j.get<int>();
}

}  // namespace

Rig rig_from_json(const Json& doc) {
  require(doc.is_object(), "rig document is not an object");
  require(member(doc, "version") == 1, "unsupported rig version");

  Rig rig;
  const Json& mesh = member(doc, "mesh");
  for (const Json& v : member(mesh, "vertices")) rig.mesh.vertices.push_back(vec3_from_json(v));
  for (const Json& t : member(mesh, "triangles")) {
    require(t.is_array() && t.size() == 3, "triangle is not an index triple");
    rig.mesh.triangles.push_back(
        {int_from_json(t[0], "triangle index"), int_from_json(t[1], "triangle index"),
         int_from_json(t[2], "triangle index")});
  }

  const Json& skel = member(doc, "skeleton");
  for (const Json& j : member(skel, "joints")) rig.skeleton.joints.push_back(vec3_from_json(j));
  for (const Json& p : member(skel, "parents")) rig.skeleton.parents.push_back(int_from_json(p, "parent index"));

  validate(rig.mesh);
  validate(rig.skeleton);

  if (doc.contains("skin")) {
    SkinWeights skin;
    skin.joint_count = static_cast<int>(rig.skeleton.size());
    for (const Json& row : member(doc["skin"], "entries")) {
      require(row.is_array(), "skin entry is not a list");
      std::vector<Influence> influences;
      for (const Json& pair : row) {
        require(pair.is_array() && pair.size() == 2 && pair[1].is_number(), "skin influence is not [joint, weight]");
        influences.push_back({int_from_json(pair[0], "skin joint index"), pair[1].get<double>()});
      }
      skin.entries.push_back(std::move(influences));
    }
    require(skin.vertex_count() == rig.mesh.vertices.size(), "skin entry count differs from mesh vertex count");
    for (std::size_t v = 0; v < skin.entries.size(); ++v)
      for (const Influence& inf : skin.entries[v])
        require(inf.joint >= 0 && inf.joint < skin.joint_count,
                "skin vertex " + std::to_string(v) + " references bad joint " + std::to_string(inf.joint));
    renormalize(skin, 1e-3);
    rig.skin = std::move(skin);
  }
  validate(rig);
  return rig;
}

Json skeleton_to_json(const Skeleton& skeleton) {
  Json joints = Json::array();
  for (const Vec3& j : skeleton.joints) joints.push_back(to_json(j));
  return {{"version", 1}, {"joints", std::move(joints)}, {"parents", skeleton.parents}};
}

Skeleton skeleton_from_json(const Json& doc) {
  require(doc.is_object(), "skeleton document is not an object");
  require(member(doc, "version") == 1, "unsupported skeleton version");
  const Json& skel = doc.contains("skeleton") ? doc.at("skeleton") : doc;
  Skeleton s;
  for (const Json& j : member(skel, "joints")) s.joints.push_back(vec3_from_json(j));
  for (const Json& p : member(skel, "parents")) s.parents.push_back(int_from_json(p, "parent index"));
  validate(s);
  return s;
}

Rig load_rig(const std::filesystem::path& path) { return rig_from_json(read_json(path)); }

void save_rig(const Rig& rig, const std::filesystem::path& path) { write_json(rig_to_json(rig), path); }

}  // namespace rigfield
