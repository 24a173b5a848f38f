#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diglab/artifact.hpp"
#include "diglab/mesh.hpp"
#include "diglab/session.hpp"
#include "diglab/voxel_grid.hpp"

namespace diglab::protocol {

// Client -> server.

struct CreateSession {
    std::string relic;
    std::optional<SessionParams> params;
    friend bool operator==(const CreateSession&, const CreateSession&) = default;
};

/// `stroke.t` is the client's clock; the server stamps its own time on receipt.
struct ApplyStroke {
    Stroke stroke;
    friend bool operator==(const ApplyStroke&, const ApplyStroke&) = default;
};

struct SelectTool {
    std::string name;
    friend bool operator==(const SelectTool&, const SelectTool&) = default;
};

struct SubscribeMesh {
    friend bool operator==(const SubscribeMesh&, const SubscribeMesh&) = default;
};

struct Ping {
    double t = 0.0;
    friend bool operator==(const Ping&, const Ping&) = default;
};

struct ClientMessage {
    double session_time = 0.0;
    std::variant<CreateSession, ApplyStroke, SelectTool, SubscribeMesh, Ping> body;
    friend bool operator==(const ClientMessage&, const ClientMessage&) = default;
};

// Server -> client.

struct SessionCreated {
    std::string session_id;
    std::vector<MeshChunk> artifact_mesh;
    GridShape grid;
    std::vector<Tool> tools;
    SessionParams params;
    friend bool operator==(const SessionCreated&, const SessionCreated&) = default;
};

/// Earth chunks re-meshed since the last delta. An empty chunk means "remove".
struct MeshDelta {
    std::vector<MeshChunk> chunks;
    friend bool operator==(const MeshDelta&, const MeshDelta&) = default;
};

struct EventMessage {
    Event event;
    friend bool operator==(const EventMessage&, const EventMessage&) = default;
};

struct State {
    int health = 0;
    double clock_remaining = 0.0;  ///< seconds
    double exposure = 0.0;
    friend bool operator==(const State&, const State&) = default;
};

struct ErrorMessage {
    std::string code;
    std::string message;
    friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

struct Pong {
    double t = 0.0;
    friend bool operator==(const Pong&, const Pong&) = default;
};

struct ServerMessage {
    double session_time = 0.0;
    std::variant<SessionCreated, MeshDelta, EventMessage, State, ErrorMessage, Pong> body;
    friend bool operator==(const ServerMessage&, const ServerMessage&) = default;
};

namespace error_code {
inline constexpr std::string_view kNoSession = "NO_SESSION";
inline constexpr std::string_view kBadFrame = "BAD_FRAME";
inline constexpr std::string_view kUnknownRelic = "UNKNOWN_RELIC";
inline constexpr std::string_view kUnknownTool = "UNKNOWN_TOOL";
inline constexpr std::string_view kSessionExists = "SESSION_EXISTS";
inline constexpr std::string_view kSessionOver = "SESSION_OVER";
inline constexpr std::string_view kBadParams = "BAD_PARAMS";
}  // namespace error_code

/// One text frame per message. Mesh arrays travel as base64 of little-endian
/// float32 / uint32 data.
std::string encode(const ClientMessage& message);
std::string encode(const ServerMessage& message);

/// Throw ParseError on anything malformed, including unknown types or keys.
ClientMessage decode_client(std::string_view frame);
ServerMessage decode_server(std::string_view frame);

/// Message type tag as it appears on the wire.
std::string_view type_name(const ClientMessage& message);
std::string_view type_name(const ServerMessage& message);

std::string base64_encode(std::string_view bytes);
/// Throws ParseError on invalid input.
std::string base64_decode(std::string_view text);

}  // namespace diglab::protocol
