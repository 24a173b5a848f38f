// Strict JSON readers/writers shared by the package, replay and wire formats.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "diglab/artifact.hpp"
#include "diglab/geometry.hpp"
#include "diglab/sdf.hpp"
#include "json.hpp"

namespace diglab::json_io {

using Json = nlohmann::ordered_json;

/// Parses `text`, mapping syntax errors to ParseError("line N", ...).
Json parse(std::string_view text);

/// Rejects keys not in `allowed`; throws ParseError at `path` if `j` is not an object.
void require_object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed);

const Json& field(const Json& j, const std::string& path, std::string_view key);
bool has(const Json& j, std::string_view key);

double number(const Json& j, const std::string& path);
double number_at(const Json& j, const std::string& path, std::string_view key);
long long integer(const Json& j, const std::string& path);
long long integer_at(const Json& j, const std::string& path, std::string_view key);
std::string string(const Json& j, const std::string& path);
std::string string_at(const Json& j, const std::string& path, std::string_view key);
bool boolean_at(const Json& j, const std::string& path, std::string_view key);

Json vec3(const Vec3& v);
Vec3 vec3(const Json& j, const std::string& path);
Json quat(const Quat& q);
Quat quat(const Json& j, const std::string& path);
Json pose(const Pose& p);
Pose pose(const Json& j, const std::string& path);

Json dialog(const DialogPayload& d);
DialogPayload dialog(const Json& j, const std::string& path);

Json params(const SessionParams& p);
/// Missing fields keep their defaults.
SessionParams params(const Json& j, const std::string& path);

Json brush_shape(const Brush& b);
Json tool(const Tool& t);
Tool tool(const Json& j, const std::string& path);

Json sdf(const SdfNode& node);
SdfPtr sdf(const Json& j, const std::string& path, int depth = 1);

Json spec(const ArtifactSpec& s);
ArtifactSpec spec(const Json& j);

}  // namespace diglab::json_io
