#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "diglab/artifact.hpp"
#include "diglab/session.hpp"

namespace diglab {

inline constexpr double kDefaultStrokeRate = 15.0;  ///< strokes per second

/// Strokes at uniformly random positions inside the clod with random orientation.
struct RandomCarver {
    double strokes_per_s = kDefaultStrokeRate;
    friend bool operator==(const RandomCarver&, const RandomCarver&) = default;
};

/// Greedy digger: always strokes the exposed earth cell closest to the clod center.
struct SurfaceFollower {
    double stand_off = 0.0;  ///< brush center offset outward from the target cell, meters
    friend bool operator==(const SurfaceFollower&, const SurfaceFollower&) = default;
};

/// Oracle bot reading the true SDF. Carves freely with the run tool while the
/// whole support stays at SDF >= sdf_margin; closer in, it switches to the
/// smallest tool and only takes poses that cover no artifact cell.
struct RiskAverse {
    double sdf_margin = 0.08;
    friend bool operator==(const RiskAverse&, const RiskAverse&) = default;
};

struct BotPolicy {
    std::variant<RandomCarver, SurfaceFollower, RiskAverse> variant;
    std::uint64_t seed = 0;

    /// Throws ValidationError on a non-positive rate or negative distances.
    void validate() const;
    /// "random", "surface-follower" or "risk-averse".
    std::string_view name() const;

    friend bool operator==(const BotPolicy&, const BotPolicy&) = default;
};

/// Parses a policy name as accepted by name(); nullopt when unknown.
std::optional<BotPolicy> policy_from_name(std::string_view name, std::uint64_t seed);

struct RunOptions {
    std::optional<SessionParams> params;  ///< overrides the spec's session params
    std::optional<std::string> tool;      ///< run tool; the spec's first tool otherwise
    std::optional<std::size_t> max_strokes;  ///< after the budget the bot idles to the time limit
};

struct RunMetrics {
    bool completion = false;
    double duration = 0.0;  ///< seconds
    int hits = 0;
    std::size_t strokes = 0;
    std::vector<std::pair<double, double>> exposure_curve;  ///< (t, exposure), one point per change
    double removed_volume = 0.0;  ///< m^3

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct BotRun {
    SessionReport report;
    RunMetrics metrics;
};

/// Plays one full session to a terminal status. Deterministic in (spec, policy, options).
BotRun run_bot(const ArtifactSpec& spec, const BotPolicy& policy, const RunOptions& options = {});

/// Like run_bot but hands back the finished session (event log, inputs, meshes).
std::pair<std::unique_ptr<Session>, BotRun> run_bot_session(const ArtifactSpec& spec, const BotPolicy& policy,
                                                            const RunOptions& options = {});

/// Calls fn(0..n-1) on up to `workers` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Independent runs spread over `workers` threads; results keep the input order.
std::vector<BotRun> run_batch(const ArtifactSpec& spec, const std::vector<BotPolicy>& policies,
                              const RunOptions& options = {}, unsigned workers = 1);

struct ToolRun {
    std::string tool;
    BotRun run;
};

inline constexpr std::size_t kDefaultCompareStrokes = 600;

/// One run per tool with the same policy and seed and an equal stroke budget
/// (options.max_strokes, else kDefaultCompareStrokes). Throws UnknownToolError.
std::vector<ToolRun> compare_tools(const ArtifactSpec& spec, const BotPolicy& policy,
                                   const std::vector<std::string>& tool_names, RunOptions options = {});

/// A metrics row with its identifying columns.
struct MetricsRow {
    std::string relic;
    std::string policy;
    std::uint64_t seed = 0;
    std::string tool;
    BotRun run;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
/// Header plus one line per row.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Summary document over a set of runs: per-run report and metrics plus aggregates.
std::string summary_json(const std::string& spec_hash, const std::vector<MetricsRow>& rows);

}  // namespace diglab
