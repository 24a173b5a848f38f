#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diglab/artifact.hpp"
#include "diglab/mesh.hpp"
#include "diglab/surface_mesher.hpp"
#include "diglab/voxel_grid.hpp"

namespace diglab {

enum class SessionStatus : std::uint8_t { Running, Completed, TimeUp };

std::string_view to_string(SessionStatus status);

/// One discrete tool application with the active tool. `t` is session seconds.
struct Stroke {
    double t = 0.0;
    Pose pose;

    friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct SessionReport {
    SessionStatus status = SessionStatus::Running;
    double duration = 0.0;  ///< seconds
    int hits_taken = 0;
    int health = 0;
    double exposure = 0.0;
    std::size_t strokes = 0;
    std::size_t triggers_revealed = 0;
    double removed_volume = 0.0;  ///< m^3

    friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

struct StrokeApplied {
    std::string tool;
    double removed_volume = 0.0;
    std::size_t cells_changed = 0;
    std::size_t cells_emptied = 0;
    bool artifact_contact = false;
    friend bool operator==(const StrokeApplied&, const StrokeApplied&) = default;
};

/// The strike warning: the client plays its warning sound on this.
struct HitEvent {
    Vec3 contact_point;
    int health_after = 0;
    friend bool operator==(const HitEvent&, const HitEvent&) = default;
};

struct TriggerRevealed {
    std::string trigger_id;
    DialogPayload dialog;
    friend bool operator==(const TriggerRevealed&, const TriggerRevealed&) = default;
};

struct ExposureMilestone {
    int decile = 0;  ///< 1..10: exposure crossed decile / 10
    friend bool operator==(const ExposureMilestone&, const ExposureMilestone&) = default;
};

struct CompletedEvent {
    DialogPayload dialog;
    SessionReport stats;
    friend bool operator==(const CompletedEvent&, const CompletedEvent&) = default;
};

struct TimeUpEvent {
    SessionReport stats;
    friend bool operator==(const TimeUpEvent&, const TimeUpEvent&) = default;
};

struct Event {
    double t = 0.0;
    std::variant<StrokeApplied, HitEvent, TriggerRevealed, ExposureMilestone, CompletedEvent, TimeUpEvent> body;

    template <class T>
    bool is() const {
        return std::holds_alternative<T>(body);
    }
    template <class T>
    const T& as() const {
        return std::get<T>(body);
    }
    std::string_view kind() const;

    friend bool operator==(const Event&, const Event&) = default;
};

/// A recorded session input, in application order. Enough to replay a session.
struct SessionInput {
    enum class Kind : std::uint8_t { Stroke, Tick, SelectTool };
    Kind kind = Kind::Tick;
    double t = 0.0;
    Pose pose;          ///< Stroke only
    std::string tool;   ///< SelectTool only

    friend bool operator==(const SessionInput&, const SessionInput&) = default;
};

/// One excavation session: the rules state machine around a clod.
///
/// Not thread-safe; one owner serializes all calls. Status moves from Running
/// to Completed or TimeUp exactly once and is then absorbing.
class Session {
public:
    Session(std::shared_ptr<const ArtifactSpec> spec, std::uint64_t seed,
            std::optional<SessionParams> params = std::nullopt);

    /// Advances the clock to stroke.t, carves with the active tool and applies
    /// hit, trigger, exposure and completion rules. Returns the new events.
    /// Throws SessionError when the session is over or stroke.t < clock.
    std::vector<Event> apply_stroke(const Stroke& stroke);

    /// Advances the clock without carving; may emit TIME_UP. No-op once over.
    /// Throws SessionError when `now` < clock.
    std::vector<Event> tick(double now);

    /// Throws UnknownToolError or SessionError (not running).
    void select_tool(std::string_view tool_name);

    /// Throws SessionError while still running.
    SessionReport final_report() const;
    /// Report of the current state, also valid while running.
    SessionReport current_report() const;

    SessionStatus status() const { return status_; }
    bool running() const { return status_ == SessionStatus::Running; }
    double clock() const { return clock_; }
    int health() const { return health_; }
    int hits() const { return hits_; }
    double exposure() const;
    const std::vector<std::string>& revealed_trigger_ids() const { return revealed_ids_; }
    const std::string& active_tool() const { return active_tool_; }
    std::size_t stroke_count() const { return strokes_; }
    std::optional<double> last_hit_time() const { return last_hit_time_; }

    const std::vector<Event>& events() const { return events_; }
    const std::vector<SessionInput>& inputs() const { return inputs_; }
    const ArtifactSpec& spec() const { return *spec_; }
    const std::shared_ptr<const ArtifactSpec>& spec_ptr() const { return spec_; }
    const SessionParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    const VoxelGrid& grid() const { return grid_; }
    const std::vector<MeshChunk>& artifact_mesh() const { return artifact_mesh_; }

    /// Re-meshes the earth chunks dirtied since the last call.
    std::vector<MeshChunk> remesh_dirty(unsigned workers = 1) { return mesher_.remesh_dirty(grid_, workers); }
    /// Latest non-empty earth chunks (after remesh_dirty).
    std::vector<MeshChunk> earth_mesh() const { return mesher_.current_nonempty(); }

private:
    void emit(std::vector<Event>& out, double t, decltype(Event::body) body);
    void finish(std::vector<Event>& out, SessionStatus status, double t);

    std::shared_ptr<const ArtifactSpec> spec_;
    SessionParams params_;
    std::uint64_t seed_ = 0;
    VoxelGrid grid_;
    ChunkMesher mesher_;
    std::vector<MeshChunk> artifact_mesh_;
    std::vector<std::pair<std::size_t, std::size_t>> trigger_cells_;  // (cell index, trigger index), sorted
    std::vector<bool> trigger_revealed_;

    SessionStatus status_ = SessionStatus::Running;
    double clock_ = 0.0;
    int health_ = 0;
    int hits_ = 0;
    int decile_ = 0;
    std::vector<std::string> revealed_ids_;
    std::string active_tool_;
    std::size_t strokes_ = 0;
    std::optional<double> last_hit_time_;
    std::vector<Event> events_;
    std::vector<SessionInput> inputs_;
};

/// Starts a session with the spec's own parameters.
Session start_session(const ArtifactSpec& spec, std::uint64_t seed);

/// Event log as JSON lines, one event per line. Byte-stable for equal logs.
std::string serialize_event_log(const std::vector<Event>& events);
std::string serialize_event(const Event& event);
std::string serialize_report(const SessionReport& report);

}  // namespace diglab
