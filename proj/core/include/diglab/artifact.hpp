#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diglab/geometry.hpp"
#include "diglab/sdf.hpp"
#include "diglab/voxel_grid.hpp"

namespace diglab {

struct DialogPayload {
    std::string title;
    std::string body;
    std::optional<std::string> audio_ref;  ///< opaque asset id, never decoded

    friend bool operator==(const DialogPayload&, const DialogPayload&) = default;
};

/// Invisible point near the relic surface; uncovering it reveals `dialog`.
struct TriggerPoint {
    std::string id;
    Vec3 position;
    DialogPayload dialog;

    friend bool operator==(const TriggerPoint&, const TriggerPoint&) = default;
};

struct Tool {
    std::string name;
    Brush brush;

    friend bool operator==(const Tool&, const Tool&) = default;
};

struct SessionParams {
    double time_limit = 420.0;  ///< seconds
    int max_health = 40;
    int hit_penalty = 1;
    double completion_exposure = 0.95;
    double hit_cooldown = 0.25;  ///< seconds between counted strikes

    /// Throws ValidationError naming the offending field.
    void validate() const;

    friend bool operator==(const SessionParams&, const SessionParams&) = default;
};

inline constexpr double kDefaultRevealMargin = 0.06;
inline constexpr int kDefaultTriggerCount = 3;
inline constexpr double kDefaultClodEdge = 2.0;
inline constexpr double kDefaultCellSize = 0.02;

/// A relic package. Immutable after load; safe to share across sessions.
struct ArtifactSpec {
    std::string name;
    SdfPtr geometry;
    std::vector<TriggerPoint> triggers;
    DialogPayload completion_dialog;
    double clod_edge = kDefaultClodEdge;
    double cell_size = kDefaultCellSize;
    std::vector<Tool> tools;
    SessionParams session;
    int trigger_count = kDefaultTriggerCount;  ///< required number of triggers
    double reveal_margin = kDefaultRevealMargin;

    const Tool* find_tool(std::string_view tool_name) const;

    friend bool operator==(const ArtifactSpec& a, const ArtifactSpec& b);
};

/// Default hand tools: a round hammer head and a broad, thin shovel blade.
Tool hammer_tool();
Tool shovel_tool();

/// Parses and validates a package document (JSON syntax, strict keys).
/// Throws ParseError (with line or JSON pointer) or ValidationError.
ArtifactSpec load_spec(std::string_view document);
ArtifactSpec load_spec_file(const std::string& path);

/// Checks every package invariant, including trigger placement against the SDF.
void validate_spec(const ArtifactSpec& spec);

/// Canonical document for a spec; load_spec(serialize_spec(s)) == s.
std::string serialize_spec(const ArtifactSpec& spec);

/// 16 hex digit FNV-1a hash of the canonical document.
std::string spec_hash(const ArtifactSpec& spec);

/// Bundled relics: "arhat" and "gold_mask".
std::vector<ArtifactSpec> builtin_relics();

}  // namespace diglab
