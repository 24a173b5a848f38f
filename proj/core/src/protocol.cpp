#include "diglab/protocol.hpp"

#include <sodium.h>

#include <bit>
#include <cstring>

#include "diglab/error.hpp"
#include "json_io.hpp"
#include "session_json.hpp"

namespace diglab::protocol {

namespace {

using json_io::Json;

template <class T>
std::string pack_le(const std::vector<T>& values) {
    static_assert(sizeof(T) == 4);
    std::string bytes(values.size() * 4, '\0');
    for (std::size_t n = 0; n < values.size(); ++n) {
        const auto bits = std::bit_cast<std::uint32_t>(values[n]);
        for (int b = 0; b < 4; ++b) {
            bytes[n * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
        }
    }
    return base64_encode(bytes);
}

template <class T>
std::vector<T> unpack_le(const Json& j, const std::string& path) {
    const std::string bytes = base64_decode(json_io::string(j, path));
    if (bytes.size() % 4 != 0) {
        throw ParseError(path, "byte length is not a multiple of 4");
    }
    std::vector<T> values(bytes.size() / 4);
    for (std::size_t n = 0; n < values.size(); ++n) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[n * 4 + b])) << (8 * b);
        }
        values[n] = std::bit_cast<T>(bits);
    }
    return values;
}

Json int3(const Int3& c) { return Json::array({c.x, c.y, c.z}); }

Int3 int3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(path, "expected an array of 3 integers");
    }
    return {static_cast<int>(json_io::integer(j[0], path + "/0")), static_cast<int>(json_io::integer(j[1], path + "/1")),
            static_cast<int>(json_io::integer(j[2], path + "/2"))};
}

Json chunk(const MeshChunk& c) {
    return Json{{"coord", int3(c.coord)},
                {"version", c.version},
                {"positions", pack_le(c.positions)},
                {"normals", pack_le(c.normals)},
                {"indices", pack_le(c.indices)}};
}

MeshChunk chunk(const Json& j, const std::string& path) {
    json_io::require_object(j, path, {"coord", "version", "positions", "normals", "indices"});
    MeshChunk c;
    c.coord = int3(json_io::field(j, path, "coord"), path + "/coord");
    const Json& version = json_io::field(j, path, "version");
    if (!version.is_number_unsigned() && !(version.is_number_integer() && version.get<long long>() >= 0)) {
        throw ParseError(path + "/version", "expected a non-negative integer");
    }
    c.version = version.get<std::uint64_t>();
    c.positions = unpack_le<float>(json_io::field(j, path, "positions"), path + "/positions");
    c.normals = unpack_le<float>(json_io::field(j, path, "normals"), path + "/normals");
    c.indices = unpack_le<std::uint32_t>(json_io::field(j, path, "indices"), path + "/indices");
    if (c.positions.size() % 3 != 0 || c.normals.size() != c.positions.size() || c.indices.size() % 3 != 0) {
        throw ParseError(path, "inconsistent mesh array lengths");
    }
    return c;
}

Json chunks(const std::vector<MeshChunk>& cs) {
    Json out = Json::array();
    for (const MeshChunk& c : cs) {
        out.push_back(chunk(c));
    }
    return out;
}

std::vector<MeshChunk> chunks(const Json& j, const std::string& path) {
    if (!j.is_array()) {
        throw ParseError(path, "expected an array");
    }
    std::vector<MeshChunk> out;
    for (std::size_t n = 0; n < j.size(); ++n) {
        out.push_back(chunk(j[n], path + "/" + std::to_string(n)));
    }
    return out;
}

Json grid(const GridShape& g) {
    return Json{{"dims", int3(g.dims)},
                {"cell_size", g.cell_size},
                {"origin", json_io::vec3(g.origin)},
                {"chunk_size", g.chunk_size}};
}

GridShape grid(const Json& j, const std::string& path) {
    json_io::require_object(j, path, {"dims", "cell_size", "origin", "chunk_size"});
    GridShape g;
    g.dims = int3(json_io::field(j, path, "dims"), path + "/dims");
    g.cell_size = json_io::number_at(j, path, "cell_size");
    g.origin = json_io::vec3(json_io::field(j, path, "origin"), path + "/origin");
    g.chunk_size = static_cast<int>(json_io::integer_at(j, path, "chunk_size"));
    return g;
}

Json envelope(std::string_view type, double session_time) {
    return Json{{"type", std::string(type)}, {"session_time", session_time}};
}

Json parse_envelope(std::string_view frame, std::string& type, double& session_time) {
    Json j = json_io::parse(frame);
    if (!j.is_object()) {
        throw ParseError("", "frame must be an object");
    }
    type = json_io::string_at(j, "", "type");
    session_time = json_io::number_at(j, "", "session_time");
    return j;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    if (sodium_init() < 0) {
        throw Error("libsodium failed to initialize");
    }
    std::string out(sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                      sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (sodium_init() < 0) {
        throw Error("libsodium failed to initialize");
    }
    std::string out(text.size() / 4 * 3 + 3, '\0');
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(), text.size(), nullptr,
                          &len, &end, sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size()) {
        throw ParseError("", "invalid base64 payload");
    }
    out.resize(len);
    return out;
}

std::string_view type_name(const ClientMessage& message) {
    static constexpr std::string_view kNames[] = {"create_session", "apply_stroke", "select_tool", "subscribe_mesh",
                                                  "ping"};
    return kNames[message.body.index()];
}

std::string_view type_name(const ServerMessage& message) {
    static constexpr std::string_view kNames[] = {"session_created", "mesh_delta", "event", "state", "error", "pong"};
    return kNames[message.body.index()];
}

std::string encode(const ClientMessage& message) {
    Json j = envelope(type_name(message), message.session_time);
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, CreateSession>) {
                j["relic"] = b.relic;
                if (b.params) {
                    j["params"] = json_io::params(*b.params);
                }
            } else if constexpr (std::is_same_v<T, ApplyStroke>) {
                j["t"] = b.stroke.t;
                j["pose"] = json_io::pose(b.stroke.pose);
            } else if constexpr (std::is_same_v<T, SelectTool>) {
                j["name"] = b.name;
            } else if constexpr (std::is_same_v<T, Ping>) {
                j["t"] = b.t;
            }
        },
        message.body);
    return j.dump();
}

std::string encode(const ServerMessage& message) {
    Json j = envelope(type_name(message), message.session_time);
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, SessionCreated>) {
                j["session_id"] = b.session_id;
                j["artifact_mesh"] = chunks(b.artifact_mesh);
                j["grid"] = grid(b.grid);
                Json tools = Json::array();
                for (const Tool& t : b.tools) {
                    tools.push_back(json_io::tool(t));
                }
                j["tools"] = std::move(tools);
                j["params"] = json_io::params(b.params);
            } else if constexpr (std::is_same_v<T, MeshDelta>) {
                j["chunks"] = chunks(b.chunks);
            } else if constexpr (std::is_same_v<T, EventMessage>) {
                j["event"] = json_io::event(b.event);
            } else if constexpr (std::is_same_v<T, State>) {
                j["health"] = b.health;
                j["clock_remaining"] = b.clock_remaining;
                j["exposure"] = b.exposure;
            } else if constexpr (std::is_same_v<T, ErrorMessage>) {
                j["code"] = b.code;
                j["message"] = b.message;
            } else {
                j["t"] = b.t;
            }
        },
        message.body);
    return j.dump();
}

ClientMessage decode_client(std::string_view frame) {
    std::string type;
    ClientMessage m;
    const Json j = parse_envelope(frame, type, m.session_time);
    if (type == "create_session") {
        json_io::require_object(j, "", {"type", "session_time", "relic", "params"});
        CreateSession b{json_io::string_at(j, "", "relic"), std::nullopt};
        if (json_io::has(j, "params")) {
            b.params = json_io::params(j.at("params"), "/params");
        }
        m.body = std::move(b);
    } else if (type == "apply_stroke") {
        json_io::require_object(j, "", {"type", "session_time", "t", "pose"});
        m.body = ApplyStroke{{json_io::number_at(j, "", "t"), json_io::pose(json_io::field(j, "", "pose"), "/pose")}};
    } else if (type == "select_tool") {
        json_io::require_object(j, "", {"type", "session_time", "name"});
        m.body = SelectTool{json_io::string_at(j, "", "name")};
    } else if (type == "subscribe_mesh") {
        json_io::require_object(j, "", {"type", "session_time"});
        m.body = SubscribeMesh{};
    } else if (type == "ping") {
        json_io::require_object(j, "", {"type", "session_time", "t"});
        m.body = Ping{json_io::number_at(j, "", "t")};
    } else {
        throw ParseError("/type", "unknown client message type '" + type + "'");
    }
    return m;
}

ServerMessage decode_server(std::string_view frame) {
    std::string type;
    ServerMessage m;
    const Json j = parse_envelope(frame, type, m.session_time);
    if (type == "session_created") {
        json_io::require_object(j, "", {"type", "session_time", "session_id", "artifact_mesh", "grid", "tools", "params"});
        SessionCreated b;
        b.session_id = json_io::string_at(j, "", "session_id");
        b.artifact_mesh = chunks(json_io::field(j, "", "artifact_mesh"), "/artifact_mesh");
        b.grid = grid(json_io::field(j, "", "grid"), "/grid");
        const Json& tools = json_io::field(j, "", "tools");
        if (!tools.is_array()) {
            throw ParseError("/tools", "expected an array");
        }
        for (std::size_t n = 0; n < tools.size(); ++n) {
            b.tools.push_back(json_io::tool(tools[n], "/tools/" + std::to_string(n)));
        }
        b.params = json_io::params(json_io::field(j, "", "params"), "/params");
        m.body = std::move(b);
    } else if (type == "mesh_delta") {
        json_io::require_object(j, "", {"type", "session_time", "chunks"});
        m.body = MeshDelta{chunks(json_io::field(j, "", "chunks"), "/chunks")};
    } else if (type == "event") {
        json_io::require_object(j, "", {"type", "session_time", "event"});
        m.body = EventMessage{json_io::event(json_io::field(j, "", "event"), "/event")};
    } else if (type == "state") {
        json_io::require_object(j, "", {"type", "session_time", "health", "clock_remaining", "exposure"});
        m.body = State{static_cast<int>(json_io::integer_at(j, "", "health")), json_io::number_at(j, "", "clock_remaining"),
                       json_io::number_at(j, "", "exposure")};
    } else if (type == "error") {
        json_io::require_object(j, "", {"type", "session_time", "code", "message"});
        m.body = ErrorMessage{json_io::string_at(j, "", "code"), json_io::string_at(j, "", "message")};
    } else if (type == "pong") {
        json_io::require_object(j, "", {"type", "session_time", "t"});
        m.body = Pong{json_io::number_at(j, "", "t")};
    } else {
        throw ParseError("/type", "unknown server message type '" + type + "'");
    }
    return m;
}

}  // namespace diglab::protocol
