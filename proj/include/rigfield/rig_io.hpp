#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rigfield/rig.hpp"

namespace rigfield {

using Json = nlohmann::json;

/// Rounds to 9 significant decimal digits, the precision used in every file
/// this library writes.
double round_sig9(double value);

Json to_json(const Vec3& p);
Vec3 vec3_from_json(const Json& j);

/// Reads and parses a JSON document. Missing files raise Io, malformed text
/// raises Parse.
Json read_json(const std::filesystem::path& path);
void write_json(const Json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

Json rig_to_json(const Rig& rig);
/// Builds and validates a rig. Skin rows within 1e-3 of summing to one are
/// renormalized; larger drift is a validation error.
Rig rig_from_json(const Json& doc);

/// Skeleton-only document: {"version": 1, "joints": [...], "parents": [...]}.
Json skeleton_to_json(const Skeleton& skeleton);
/// Accepts a skeleton document or a full rig document.
Skeleton skeleton_from_json(const Json& doc);

Rig load_rig(const std::filesystem::path& path);
void save_rig(const Rig& rig, const std::filesystem::path& path);

}  // namespace rigfield
