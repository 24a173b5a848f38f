#include "json_io.hpp"

#include <algorithm>
#include <cmath>

#include "diglab/error.hpp"

namespace diglab::json_io {
namespace {

std::string join(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ParseError(path, what); }

}  // namespace

Json parse(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        // nlohmann's message already carries a position; keep only the reason.
        std::string what = e.what();
        if (const auto pos = what.find("syntax error"); pos != std::string::npos) {
            what = what.substr(pos);
        }
        throw ParseError("line " + std::to_string(line), what);
    }
}

void require_object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
        fail(path.empty() ? "/" : path, "expected an object");
    }
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            fail(join(path, item.key()), "unknown key");
        }
    }
}

bool has(const Json& j, std::string_view key) { return j.is_object() && j.contains(key); }

const Json& field(const Json& j, const std::string& path, std::string_view key) {
    if (!has(j, key)) {
        fail(join(path, key), "missing required key");
    }
    return j.at(std::string(key));
}

double number(const Json& j, const std::string& path) {
    if (!j.is_number()) {
        fail(path, "expected a number");
    }
    return j.get<double>();
}
double number_at(const Json& j, const std::string& path, std::string_view key) {
    return number(field(j, path, key), join(path, key));
}

long long integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        fail(path, "expected an integer");
    }
    return j.get<long long>();
}
long long integer_at(const Json& j, const std::string& path, std::string_view key) {
    return integer(field(j, path, key), join(path, key));
}

std::string string(const Json& j, const std::string& path) {
    if (!j.is_string()) {
        fail(path, "expected a string");
    }
    return j.get<std::string>();
}
std::string string_at(const Json& j, const std::string& path, std::string_view key) {
    return string(field(j, path, key), join(path, key));
}

bool boolean_at(const Json& j, const std::string& path, std::string_view key) {
    const Json& v = field(j, path, key);
    if (!v.is_boolean()) {
        fail(join(path, key), "expected a boolean");
    }
    return v.get<bool>();
}

Json vec3(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) {
        fail(path, "expected [x, y, z]");
    }
    return {number(j[0], path + "/0"), number(j[1], path + "/1"), number(j[2], path + "/2")};
}

Json quat(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }

Quat quat(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) {
        fail(path, "expected [w, x, y, z]");
    }
    return {number(j[0], path + "/0"), number(j[1], path + "/1"), number(j[2], path + "/2"),
            number(j[3], path + "/3")};
}

Json pose(const Pose& p) { return Json{{"position", vec3(p.position)}, {"orientation", quat(p.orientation)}}; }

Pose pose(const Json& j, const std::string& path) {
    require_object(j, path, {"position", "orientation"});
    Pose p;
    p.position = vec3(field(j, path, "position"), join(path, "position"));
    if (has(j, "orientation")) {
        p.orientation = quat(j.at("orientation"), join(path, "orientation"));
    }
    return p;
}

Json dialog(const DialogPayload& d) {
    Json j{{"title", d.title}, {"body", d.body}};
    if (d.audio_ref) {
        j["audio_ref"] = *d.audio_ref;
    }
    return j;
}

DialogPayload dialog(const Json& j, const std::string& path) {
    require_object(j, path, {"title", "body", "audio_ref"});
    DialogPayload d;
    d.title = has(j, "title") ? string_at(j, path, "title") : std::string{};
    d.body = string_at(j, path, "body");
    if (has(j, "audio_ref")) {
        d.audio_ref = string_at(j, path, "audio_ref");
    }
    return d;
}

Json params(const SessionParams& p) {
    return Json{{"time_limit_s", p.time_limit},
                {"max_health", p.max_health},
                {"hit_penalty", p.hit_penalty},
                {"completion_exposure", p.completion_exposure},
                {"hit_cooldown_s", p.hit_cooldown}};
}

SessionParams params(const Json& j, const std::string& path) {
    require_object(j, path, {"time_limit_s", "max_health", "hit_penalty", "completion_exposure", "hit_cooldown_s"});
    SessionParams p;
    if (has(j, "time_limit_s")) {
        p.time_limit = number_at(j, path, "time_limit_s");
    }
    if (has(j, "max_health")) {
        p.max_health = static_cast<int>(integer_at(j, path, "max_health"));
    }
    if (has(j, "hit_penalty")) {
        p.hit_penalty = static_cast<int>(integer_at(j, path, "hit_penalty"));
    }
    if (has(j, "completion_exposure")) {
        p.completion_exposure = number_at(j, path, "completion_exposure");
    }
    if (has(j, "hit_cooldown_s")) {
        p.hit_cooldown = number_at(j, path, "hit_cooldown_s");
    }
    return p;
}

Json brush_shape(const Brush& b) {
    if (const auto* s = std::get_if<SphereBrush>(&b.shape)) {
        return Json{{"type", "sphere"}, {"radius", s->radius}};
    }
    return Json{{"type", "box"}, {"half_extents", vec3(std::get<BoxBrush>(b.shape).half_extents)}};
}

Json tool(const Tool& t) {
    return Json{{"name", t.name},
                {"shape", brush_shape(t.brush)},
                {"strength", t.brush.strength},
                {"falloff", t.brush.falloff == Falloff::Hard ? "hard" : "linear"}};
}

Tool tool(const Json& j, const std::string& path) {
    require_object(j, path, {"name", "shape", "strength", "falloff"});
    Tool t;
    t.name = string_at(j, path, "name");
    const std::string shape_path = join(path, "shape");
    const Json& shape = field(j, path, "shape");
    const std::string type = string_at(shape, shape_path, "type");
    if (type == "sphere") {
        require_object(shape, shape_path, {"type", "radius"});
        t.brush.shape = SphereBrush{number_at(shape, shape_path, "radius")};
    } else if (type == "box") {
        require_object(shape, shape_path, {"type", "half_extents"});
        t.brush.shape = BoxBrush{vec3(field(shape, shape_path, "half_extents"), join(shape_path, "half_extents"))};
    } else {
        fail(join(shape_path, "type"), "unknown brush shape '" + type + "'");
    }
    if (has(j, "strength")) {
        t.brush.strength = number_at(j, path, "strength");
    }
    if (has(j, "falloff")) {
        const std::string f = string_at(j, path, "falloff");
        if (f == "hard") {
            t.brush.falloff = Falloff::Hard;
        } else if (f == "linear") {
            t.brush.falloff = Falloff::Linear;
        } else {
            fail(join(path, "falloff"), "expected \"hard\" or \"linear\"");
        }
    }
    return t;
}

Json sdf(const SdfNode& node) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SdfSphere>) {
                return Json{{"type", "sphere"}, {"center", vec3(s.center)}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, SdfBox>) {
                return Json{{"type", "box"}, {"center", vec3(s.center)}, {"half_extents", vec3(s.half_extents)}};
            } else if constexpr (std::is_same_v<T, SdfCapsule>) {
                return Json{{"type", "capsule"}, {"p0", vec3(s.p0)}, {"p1", vec3(s.p1)}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, SdfUnion>) {
                Json children = Json::array();
                for (const auto& c : s.children) {
                    children.push_back(sdf(*c));
                }
                return Json{{"type", "union"}, {"children", std::move(children)}};
            } else if constexpr (std::is_same_v<T, SdfTranslate>) {
                return Json{{"type", "translate"}, {"offset", vec3(s.offset)}, {"child", sdf(*s.child)}};
            } else {
                return Json{{"type", "scale"}, {"factor", s.factor}, {"child", sdf(*s.child)}};
            }
        },
        node.shape);
}

SdfPtr sdf(const Json& j, const std::string& path, int depth) {
    if (depth > kMaxSdfDepth) {
        fail(path, "sdf tree deeper than " + std::to_string(kMaxSdfDepth));
    }
    const std::string type = string_at(j, path, "type");
    if (type == "sphere") {
        require_object(j, path, {"type", "center", "radius"});
        const Vec3 c = has(j, "center") ? vec3(j.at("center"), join(path, "center")) : Vec3{};
        return make_sphere(c, number_at(j, path, "radius"));
    }
    if (type == "box") {
        require_object(j, path, {"type", "center", "half_extents"});
        const Vec3 c = has(j, "center") ? vec3(j.at("center"), join(path, "center")) : Vec3{};
        return make_box(c, vec3(field(j, path, "half_extents"), join(path, "half_extents")));
    }
    if (type == "capsule") {
        require_object(j, path, {"type", "p0", "p1", "radius"});
        return make_capsule(vec3(field(j, path, "p0"), join(path, "p0")), vec3(field(j, path, "p1"), join(path, "p1")),
                            number_at(j, path, "radius"));
    }
    if (type == "union") {
        require_object(j, path, {"type", "children"});
        const Json& children = field(j, path, "children");
        if (!children.is_array()) {
            fail(join(path, "children"), "expected an array");
        }
        std::vector<SdfPtr> nodes;
        for (std::size_t i = 0; i < children.size(); ++i) {
            nodes.push_back(sdf(children[i], join(path, "children") + "/" + std::to_string(i), depth + 1));
        }
        return make_union(std::move(nodes));
    }
    if (type == "translate") {
        require_object(j, path, {"type", "offset", "child"});
        return make_translate(sdf(field(j, path, "child"), join(path, "child"), depth + 1),
                              vec3(field(j, path, "offset"), join(path, "offset")));
    }
    if (type == "scale") {
        require_object(j, path, {"type", "factor", "child"});
        return make_scale(sdf(field(j, path, "child"), join(path, "child"), depth + 1),
                          number_at(j, path, "factor"));
    }
    fail(join(path, "type"), "unknown sdf node type '" + type + "'");
}

Json spec(const ArtifactSpec& s) {
    Json triggers = Json::array();
    for (const auto& t : s.triggers) {
        triggers.push_back(Json{{"id", t.id}, {"position", vec3(t.position)}, {"dialog", dialog(t.dialog)}});
    }
    Json tools = Json::array();
    for (const auto& t : s.tools) {
        tools.push_back(tool(t));
    }
    Json j{{"name", s.name},
           {"geometry", sdf(*s.geometry)},
           {"triggers", std::move(triggers)},
           {"completion_dialog", dialog(s.completion_dialog)},
           {"clod_edge", s.clod_edge},
           {"cell_size", s.cell_size},
           {"tools", std::move(tools)},
           {"session", params(s.session)}};
    if (s.trigger_count != kDefaultTriggerCount) {
        j["trigger_count"] = s.trigger_count;
    }
    if (s.reveal_margin != kDefaultRevealMargin) {
        j["reveal_margin"] = s.reveal_margin;
    }
    return j;
}

ArtifactSpec spec(const Json& j) {
    require_object(j, "", {"name", "geometry", "triggers", "completion_dialog", "clod_edge", "cell_size", "tools",
                           "session", "trigger_count", "reveal_margin"});
    ArtifactSpec s;
    s.name = string_at(j, "", "name");
    s.geometry = sdf(field(j, "", "geometry"), "/geometry");
    const Json& triggers = field(j, "", "triggers");
    if (!triggers.is_array()) {
        fail("/triggers", "expected an array");
    }
    for (std::size_t i = 0; i < triggers.size(); ++i) {
        const std::string path = "/triggers/" + std::to_string(i);
        require_object(triggers[i], path, {"id", "position", "dialog"});
        TriggerPoint t;
        t.id = string_at(triggers[i], path, "id");
        t.position = vec3(field(triggers[i], path, "position"), path + "/position");
        t.dialog = dialog(field(triggers[i], path, "dialog"), path + "/dialog");
        s.triggers.push_back(std::move(t));
    }
    s.completion_dialog = dialog(field(j, "", "completion_dialog"), "/completion_dialog");
    if (has(j, "clod_edge")) {
        s.clod_edge = number_at(j, "", "clod_edge");
    }
    if (has(j, "cell_size")) {
        s.cell_size = number_at(j, "", "cell_size");
    }
    const Json& tools = field(j, "", "tools");
    if (!tools.is_array()) {
        fail("/tools", "expected an array");
    }
    for (std::size_t i = 0; i < tools.size(); ++i) {
        s.tools.push_back(tool(tools[i], "/tools/" + std::to_string(i)));
    }
    if (has(j, "session")) {
        s.session = params(j.at("session"), "/session");
    }
    if (has(j, "trigger_count")) {
        s.trigger_count = static_cast<int>(integer_at(j, "", "trigger_count"));
    }
    if (has(j, "reveal_margin")) {
        s.reveal_margin = number_at(j, "", "reveal_margin");
    }
    return s;
}

}  // namespace diglab::json_io
