#include "diglab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <queue>
#include <thread>

#include "diglab/error.hpp"
#include "diglab/random.hpp"
#include "session_json.hpp"

namespace diglab {

namespace {

constexpr std::array<Int3, 6> kFaceNeighbors{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

struct CellBox {
    Int3 lo;
    Int3 hi;  // inclusive; empty when any hi < lo
};

CellBox cells_with_center_in(const GridShape& shape, const Aabb& box) {
    CellBox out;
    int* lo[3] = {&out.lo.x, &out.lo.y, &out.lo.z};
    int* hi[3] = {&out.hi.x, &out.hi.y, &out.hi.z};
    for (int axis = 0; axis < 3; ++axis) {
        const double o = shape.origin[axis];
        const double n = shape.dims[axis];
        *lo[axis] = static_cast<int>(std::clamp(std::ceil((box.min[axis] - o) / shape.cell_size - 0.5), 0.0, n));
        *hi[axis] =
            static_cast<int>(std::clamp(std::floor((box.max[axis] - o) / shape.cell_size - 0.5), -1.0, n - 1.0));
    }
    return out;
}

double brush_reach(const Brush& brush) {
    if (const auto* s = std::get_if<SphereBrush>(&brush.shape)) {
        return s->radius;
    }
    return length(std::get<BoxBrush>(brush.shape).half_extents);
}

double brush_inner_radius(const Brush& brush) {
    if (const auto* s = std::get_if<SphereBrush>(&brush.shape)) {
        return s->radius;
    }
    const Vec3& h = std::get<BoxBrush>(brush.shape).half_extents;
    return std::min({h.x, h.y, h.z});
}

const Tool& resolve_tool(const ArtifactSpec& spec, const std::optional<std::string>& name) {
    if (!name) {
        if (spec.tools.empty()) {
            throw ValidationError("spec has no tools");
        }
        return spec.tools.front();
    }
    const Tool* tool = spec.find_tool(*name);
    if (tool == nullptr) {
        throw UnknownToolError("unknown tool '" + *name + "'");
    }
    return *tool;
}

/// Session wrapper that paces strokes and records metrics.
class Driver {
public:
    Driver(Session& session, double stroke_dt, std::optional<std::size_t> budget)
        : session_(session), dt_(stroke_dt), budget_(budget) {
        curve_.emplace_back(0.0, session_.exposure());
    }

    bool can_stroke() const { return session_.running() && (!budget_ || issued_ < *budget_); }

    void use_tool(const std::string& name) {
        if (session_.active_tool() != name) {
            session_.select_tool(name);
        }
    }

    void stroke(const Pose& pose) {
        ++issued_;
        session_.apply_stroke({static_cast<double>(issued_) * dt_, pose});
        const double e = session_.exposure();
        if (e != curve_.back().second) {
            curve_.emplace_back(session_.clock(), e);
        }
    }

    BotRun finish() {
        if (session_.running()) {
            session_.tick(std::max(session_.params().time_limit, session_.clock()));
        }
        BotRun run;
        run.report = session_.final_report();
        run.metrics.completion = run.report.status == SessionStatus::Completed;
        run.metrics.duration = run.report.duration;
        run.metrics.hits = run.report.hits_taken;
        run.metrics.strokes = run.report.strokes;
        run.metrics.exposure_curve = std::move(curve_);
        run.metrics.removed_volume = run.report.removed_volume;
        return run;
    }

    Session& session() { return session_; }

private:
    Session& session_;
    double dt_;
    std::optional<std::size_t> budget_;
    std::size_t issued_ = 0;
    std::vector<std::pair<double, double>> curve_;
};

void run_random(Driver& driver, const RandomCarver& policy, std::uint64_t seed, const ArtifactSpec& spec) {
    Rng rng(seed);
    const double half = spec.clod_edge / 2.0;
    while (driver.can_stroke()) {
        Pose pose;
        pose.position = {rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half)};
        Vec3 axis;
        do {
            axis = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        } while (dot(axis, axis) > 1.0 || dot(axis, axis) < 1e-6);
        pose.orientation = Quat::from_axis_angle(axis, rng.uniform(0.0, 2.0 * std::numbers::pi));
        driver.stroke(pose);
    }
    (void)policy;
}

/// Earth cells touching empty space or the clod boundary, lowest key first.
class Frontier {
public:
    Frontier(const VoxelGrid& grid, std::function<double(const Vec3&)> key)
        : grid_(grid), key_(std::move(key)), queued_(grid.shape().cell_count(), 0),
          abandoned_(grid.shape().cell_count(), 0) {
        const Int3 d = grid.shape().dims;
        scan({{0, 0, 0}, {d.x - 1, d.y - 1, d.z - 1}});
    }

    bool exposed(const Int3& c) const {
        const GridShape& shape = grid_.shape();
        for (const Int3& o : kFaceNeighbors) {
            const Int3 n{c.x + o.x, c.y + o.y, c.z + o.z};
            if (!shape.in_bounds(n) || grid_.label(n) == Label::Empty) {
                return true;
            }
        }
        return false;
    }

    Vec3 outward(const Int3& c) const {
        const GridShape& shape = grid_.shape();
        Vec3 dir;
        for (const Int3& o : kFaceNeighbors) {
            const Int3 n{c.x + o.x, c.y + o.y, c.z + o.z};
            if (!shape.in_bounds(n) || grid_.label(n) == Label::Empty) {
                dir = dir + Vec3{static_cast<double>(o.x), static_cast<double>(o.y), static_cast<double>(o.z)};
            }
        }
        if (dot(dir, dir) < 1e-12) {
            const Vec3 p = shape.center(c);
            return dot(p, p) > 1e-12 ? normalized(p) : Vec3{0.0, 0.0, 1.0};
        }
        return normalized(dir);
    }

    void push(std::size_t idx) {
        if (queued_[idx] || abandoned_[idx]) {
            return;
        }
        queued_[idx] = 1;
        heap_.emplace(key_(grid_.shape().center(grid_.shape().coord(idx))), idx);
    }

    /// Queues every frontier cell inside `box` grown by one cell.
    void scan(CellBox box) {
        const GridShape& shape = grid_.shape();
        for (int k = std::max(box.lo.z - 1, 0); k <= std::min(box.hi.z + 1, shape.dims.z - 1); ++k) {
            for (int j = std::max(box.lo.y - 1, 0); j <= std::min(box.hi.y + 1, shape.dims.y - 1); ++j) {
                for (int i = std::max(box.lo.x - 1, 0); i <= std::min(box.hi.x + 1, shape.dims.x - 1); ++i) {
                    const std::size_t idx = shape.index(i, j, k);
                    if (!queued_[idx] && !abandoned_[idx] && grid_.label(idx) == Label::Earth && exposed({i, j, k})) {
                        push(idx);
                    }
                }
            }
        }
    }

    std::optional<std::size_t> pop() {
        while (!heap_.empty()) {
            const std::size_t idx = heap_.top().second;
            heap_.pop();
            queued_[idx] = 0;
            if (grid_.label(idx) == Label::Earth) {
                return idx;
            }
        }
        return std::nullopt;
    }

    void abandon(std::size_t idx) { abandoned_[idx] = 1; }

    /// Re-queues the target if the stroke thinned it, abandons it if not.
    void settle(std::size_t idx, double density_before) {
        if (grid_.label(idx) != Label::Earth) {
            return;
        }
        if (grid_.density(idx) < density_before) {
            push(idx);
        } else {
            abandon(idx);
        }
    }

private:
    using Entry = std::pair<double, std::size_t>;
    const VoxelGrid& grid_;
    std::function<double(const Vec3&)> key_;
    std::vector<std::uint8_t> queued_;
    std::vector<std::uint8_t> abandoned_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

void run_surface(Driver& driver, const SurfaceFollower& policy, const Tool& tool) {
    const VoxelGrid& grid = driver.session().grid();
    const GridShape& shape = grid.shape();
    Frontier frontier(grid, [](const Vec3& p) { return dot(p, p); });
    while (driver.can_stroke()) {
        const auto idx = frontier.pop();
        if (!idx) {
            break;
        }
        const Int3 c = shape.coord(*idx);
        const Vec3 out = frontier.outward(c);
        const Pose pose{shape.center(c) + out * policy.stand_off, Quat::align_z_to(out)};
        const double before = grid.density(*idx);
        driver.use_tool(tool.name);
        driver.stroke(pose);
        frontier.settle(*idx, before);
        frontier.scan(cells_with_center_in(shape, PlacedBrush(tool.brush, pose).bounds()));
    }
}

Vec3 sdf_gradient(const SdfNode& sdf, const Vec3& p, double h) {
    const Vec3 g{eval_sdf(sdf, p + Vec3{h, 0, 0}) - eval_sdf(sdf, p - Vec3{h, 0, 0}),
                 eval_sdf(sdf, p + Vec3{0, h, 0}) - eval_sdf(sdf, p - Vec3{0, h, 0}),
                 eval_sdf(sdf, p + Vec3{0, 0, h}) - eval_sdf(sdf, p - Vec3{0, 0, h})};
    return g;
}

/// Every in-grid cell center covered by the support lies at SDF >= margin.
bool support_clear(const VoxelGrid& grid, const Brush& brush, const Pose& pose, double margin) {
    const SdfNode& sdf = *grid.artifact_sdf();
    if (eval_sdf(sdf, pose.position) - brush_reach(brush) >= margin) {
        return true;
    }
    const GridShape& shape = grid.shape();
    const PlacedBrush placed(brush, pose);
    const CellBox box = cells_with_center_in(shape, placed.bounds());
    for (int k = box.lo.z; k <= box.hi.z; ++k) {
        for (int j = box.lo.y; j <= box.hi.y; ++j) {
            for (int i = box.lo.x; i <= box.hi.x; ++i) {
                const Vec3 p = shape.center(i, j, k);
                if (placed.contains(p) && eval_sdf(sdf, p) < margin) {
                    return false;
                }
            }
        }
    }
    return true;
}

void run_risk_averse(Driver& driver, const RiskAverse& policy, const Tool& tool, const ArtifactSpec& spec) {
    const VoxelGrid& grid = driver.session().grid();
    const GridShape& shape = grid.shape();
    const SdfNode& sdf = *grid.artifact_sdf();
    const Tool* fine = &spec.tools.front();
    for (const Tool& t : spec.tools) {
        if (t.brush.support_volume() < fine->brush.support_volume()) {
            fine = &t;
        }
    }
    const double fine_reach = brush_inner_radius(fine->brush);
    constexpr int kOffsetSteps = 20;

    Frontier frontier(grid, [&sdf](const Vec3& p) { return eval_sdf(sdf, p); });
    while (driver.can_stroke()) {
        const auto idx = frontier.pop();
        if (!idx) {
            break;
        }
        const Int3 c = shape.coord(*idx);
        const Vec3 target = shape.center(c);
        const Vec3 out = frontier.outward(c);

        const Tool* use = &tool;
        std::optional<Pose> pose = Pose{target, Quat::align_z_to(out)};
        if (!support_clear(grid, tool.brush, *pose, policy.sdf_margin)) {
            use = fine;
            pose.reset();
            Vec3 g = sdf_gradient(sdf, target, shape.cell_size / 2.0);
            g = dot(g, g) > 1e-18 ? normalized(g) : out;
            for (int step = 0; step < kOffsetSteps; ++step) {
                const double s = fine_reach * 0.95 * step / (kOffsetSteps - 1);
                const Pose candidate{target + g * s, Quat::align_z_to(g)};
                if (PlacedBrush(fine->brush, candidate).contains(target) &&
                    !grid.overlaps_artifact(fine->brush, candidate)) {
                    pose = candidate;
                    break;
                }
            }
            if (!pose) {
                frontier.abandon(*idx);
                continue;
            }
        }
        const double before = grid.density(*idx);
        driver.use_tool(use->name);
        driver.stroke(*pose);
        frontier.settle(*idx, before);
        frontier.scan(cells_with_center_in(shape, PlacedBrush(use->brush, *pose).bounds()));
    }
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void BotPolicy::validate() const {
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RandomCarver>) {
                if (!(p.strokes_per_s > 0.0) || !std::isfinite(p.strokes_per_s)) {
                    throw ValidationError("strokes_per_s must be positive");
                }
            } else if constexpr (std::is_same_v<T, SurfaceFollower>) {
                if (!(p.stand_off >= 0.0) || !std::isfinite(p.stand_off)) {
                    throw ValidationError("stand_off must be >= 0");
                }
            } else {
                if (!(p.sdf_margin >= 0.0) || !std::isfinite(p.sdf_margin)) {
                    throw ValidationError("sdf_margin must be >= 0");
                }
            }
        },
        variant);
}

std::string_view BotPolicy::name() const {
    switch (variant.index()) {
        case 0:
            return "random";
        case 1:
            return "surface-follower";
        default:
            return "risk-averse";
    }
}

std::optional<BotPolicy> policy_from_name(std::string_view name, std::uint64_t seed) {
    if (name == "random") {
        return BotPolicy{RandomCarver{}, seed};
    }
    if (name == "surface-follower") {
        return BotPolicy{SurfaceFollower{}, seed};
    }
    if (name == "risk-averse") {
        return BotPolicy{RiskAverse{}, seed};
    }
    return std::nullopt;
}

std::pair<std::unique_ptr<Session>, BotRun> run_bot_session(const ArtifactSpec& spec, const BotPolicy& policy,
                                                            const RunOptions& options) {
    policy.validate();
    const Tool& tool = resolve_tool(spec, options.tool);
    auto session = std::make_unique<Session>(std::make_shared<const ArtifactSpec>(spec), policy.seed, options.params);
    const double dt = 1.0 / (std::holds_alternative<RandomCarver>(policy.variant)
                                 ? std::get<RandomCarver>(policy.variant).strokes_per_s
                                 : kDefaultStrokeRate);
    Driver driver(*session, dt, options.max_strokes);
    driver.use_tool(tool.name);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RandomCarver>) {
                run_random(driver, p, policy.seed, spec);
            } else if constexpr (std::is_same_v<T, SurfaceFollower>) {
                run_surface(driver, p, tool);
            } else {
                run_risk_averse(driver, p, tool, spec);
            }
        },
        policy.variant);
    BotRun run = driver.finish();
    return {std::move(session), std::move(run)};
}

BotRun run_bot(const ArtifactSpec& spec, const BotPolicy& policy, const RunOptions& options) {
    return run_bot_session(spec, policy, options).second;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < threads; ++w) {
            pool.emplace_back(work);
        }
        work();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<BotRun> run_batch(const ArtifactSpec& spec, const std::vector<BotPolicy>& policies,
                              const RunOptions& options, unsigned workers) {
    std::vector<BotRun> results(policies.size());
    parallel_for(policies.size(), workers, [&](std::size_t n) { results[n] = run_bot(spec, policies[n], options); });
    return results;
}

std::vector<ToolRun> compare_tools(const ArtifactSpec& spec, const BotPolicy& policy,
                                   const std::vector<std::string>& tool_names, RunOptions options) {
    for (const std::string& name : tool_names) {
        resolve_tool(spec, name);
    }
    if (!options.max_strokes) {
        options.max_strokes = kDefaultCompareStrokes;
    }
    std::vector<ToolRun> table;
    for (const std::string& name : tool_names) {
        options.tool = name;
        table.push_back({name, run_bot(spec, policy, options)});
    }
    return table;
}

std::string metrics_csv_header() {
    return "relic,policy,seed,tool,status,completion,duration_s,hits,strokes,exposure,triggers_revealed,"
           "removed_volume_m3";
}

std::string metrics_csv_row(const MetricsRow& row) {
    const SessionReport& r = row.run.report;
    std::string out;
    out += row.relic + ',' + row.policy + ',' + std::to_string(row.seed) + ',' + row.tool + ',';
    out += std::string(to_string(r.status)) + ',' + (row.run.metrics.completion ? "true" : "false") + ',';
    out += fmt_double(r.duration) + ',' + std::to_string(r.hits_taken) + ',' + std::to_string(r.strokes) + ',';
    out += fmt_double(r.exposure) + ',' + std::to_string(r.triggers_revealed) + ',' + fmt_double(r.removed_volume);
    return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = metrics_csv_header() + '\n';
    for (const MetricsRow& row : rows) {
        out += metrics_csv_row(row);
        out += '\n';
    }
    return out;
}

std::string summary_json(const std::string& spec_hash, const std::vector<MetricsRow>& rows) {
    using json_io::Json;
    Json runs = Json::array();
    std::size_t completed = 0;
    double hits = 0.0;
    double duration = 0.0;
    double removed = 0.0;
    for (const MetricsRow& row : rows) {
        const RunMetrics& m = row.run.metrics;
        Json curve = Json::array();
        for (const auto& [t, e] : m.exposure_curve) {
            curve.push_back(Json::array({t, e}));
        }
        runs.push_back(Json{{"relic", row.relic},
                            {"policy", row.policy},
                            {"seed", row.seed},
                            {"tool", row.tool},
                            {"report", json_io::report(row.run.report)},
                            {"metrics",
                             Json{{"completion", m.completion},
                                  {"duration_s", m.duration},
                                  {"hits", m.hits},
                                  {"strokes", m.strokes},
                                  {"removed_volume_m3", m.removed_volume},
                                  {"exposure_curve", std::move(curve)}}}});
        completed += m.completion ? 1 : 0;
        hits += m.hits;
        duration += m.duration;
        removed += m.removed_volume;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    const Json doc{{"spec_hash", spec_hash},
                   {"runs", std::move(runs)},
                   {"aggregate",
                    Json{{"runs", rows.size()},
                         {"completed", completed},
                         {"completion_rate", static_cast<double>(completed) / n},
                         {"mean_hits", hits / n},
                         {"mean_duration_s", duration / n},
                         {"mean_removed_volume_m3", removed / n}}}};
    return doc.dump(2) + "\n";
}

}  // namespace diglab
