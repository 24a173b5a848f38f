#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "diglab/artifact.hpp"
#include "diglab/session.hpp"

namespace diglab {

inline constexpr int kReplayFormatVersion = 1;

/// Line-delimited replay document: a header line
/// {format_version, spec_hash, seed, params} followed by one line per input
/// {t, kind: stroke|tick|select_tool, payload}. Doubles round-trip exactly.
std::string export_replay(const Session& session);

/// Re-runs a replay document against `spec`. Throws ReplayMismatchError when the
/// document was recorded for a different spec, ParseError on malformed lines.
std::unique_ptr<Session> replay_session(std::string_view document, const ArtifactSpec& spec);

/// Final report of the replayed session; throws SessionError if it never finished.
SessionReport replay(std::string_view document, const ArtifactSpec& spec);

}  // namespace diglab
