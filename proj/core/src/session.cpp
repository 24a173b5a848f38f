#include "diglab/session.hpp"

#include <algorithm>

#include "diglab/error.hpp"
#include "session_json.hpp"

namespace diglab {

std::string_view to_string(SessionStatus status) {
    switch (status) {
        case SessionStatus::Running:
            return "running";
        case SessionStatus::Completed:
            return "completed";
        case SessionStatus::TimeUp:
            return "time_up";
    }
    return "running";
}

std::string_view Event::kind() const {
    switch (body.index()) {
        case 0:
            return "stroke_applied";
        case 1:
            return "hit";
        case 2:
            return "trigger_revealed";
        case 3:
            return "exposure_milestone";
        case 4:
            return "completed";
        default:
            return "time_up";
    }
}

Session::Session(std::shared_ptr<const ArtifactSpec> spec, std::uint64_t seed, std::optional<SessionParams> params)
    : spec_(std::move(spec)),
      params_(params.value_or(spec_->session)),
      seed_(seed),
      grid_(init_grid(spec_->clod_edge, spec_->cell_size, spec_->geometry)),
      mesher_(grid_.shape()),
      artifact_mesh_(mesh_artifact(*spec_->geometry, grid_.shape())) {
    params_.validate();
    if (spec_->tools.empty()) {
        throw ValidationError("spec has no tools");
    }
    if (grid_.artifact_surface_cells().empty()) {
        throw DegenerateArtifactError("artifact has no surface cells");
    }
    health_ = params_.max_health;
    active_tool_ = spec_->tools.front().name;
    trigger_revealed_.assign(spec_->triggers.size(), false);
    const GridShape& shape = grid_.shape();
    for (std::size_t n = 0; n < spec_->triggers.size(); ++n) {
        const Int3 cell = shape.cell_at(spec_->triggers[n].position);
        if (shape.in_bounds(cell)) {
            trigger_cells_.emplace_back(shape.index(cell), n);
        }
    }
    std::sort(trigger_cells_.begin(), trigger_cells_.end());
    decile_ = static_cast<int>(grid_.exposed_surface_count() * 10 / grid_.artifact_surface_cells().size());
}

double Session::exposure() const { return grid_.exposure(); }

void Session::emit(std::vector<Event>& out, double t, decltype(Event::body) body) {
    Event e{t, std::move(body)};
    events_.push_back(e);
    out.push_back(std::move(e));
}

SessionReport Session::current_report() const {
    SessionReport r;
    r.status = status_;
    r.duration = status_ == SessionStatus::TimeUp ? params_.time_limit : clock_;
    r.hits_taken = hits_;
    r.health = health_;
    r.exposure = exposure();
    r.strokes = strokes_;
    r.triggers_revealed = revealed_ids_.size();
    r.removed_volume = grid_.removed_total();
    return r;
}

SessionReport Session::final_report() const {
    if (running()) {
        throw SessionError("session is still running");
    }
    return current_report();
}

void Session::finish(std::vector<Event>& out, SessionStatus status, double t) {
    status_ = status;
    if (status == SessionStatus::Completed) {
        emit(out, t, CompletedEvent{spec_->completion_dialog, current_report()});
    } else {
        emit(out, t, TimeUpEvent{current_report()});
    }
}

std::vector<Event> Session::tick(double now) {
    if (now < clock_) {
        throw SessionError("non-monotone time: " + std::to_string(now) + " < clock " + std::to_string(clock_));
    }
    std::vector<Event> out;
    if (!running()) {
        return out;
    }
    inputs_.push_back({SessionInput::Kind::Tick, now, {}, {}});
    clock_ = now;
    if (clock_ >= params_.time_limit) {
        finish(out, SessionStatus::TimeUp, params_.time_limit);
    }
    return out;
}

void Session::select_tool(std::string_view tool_name) {
    if (!running()) {
        throw SessionError("session is over");
    }
    if (spec_->find_tool(tool_name) == nullptr) {
        throw UnknownToolError("unknown tool '" + std::string(tool_name) + "'");
    }
    inputs_.push_back({SessionInput::Kind::SelectTool, clock_, {}, std::string(tool_name)});
    active_tool_ = std::string(tool_name);
}

std::vector<Event> Session::apply_stroke(const Stroke& stroke) {
    if (!running()) {
        throw SessionError("session is over");
    }
    if (stroke.t < clock_) {
        throw SessionError("non-monotone stroke time: " + std::to_string(stroke.t) + " < clock " +
                           std::to_string(clock_));
    }
    std::vector<Event> out;
    inputs_.push_back({SessionInput::Kind::Stroke, stroke.t, stroke.pose, {}});
    clock_ = stroke.t;
    if (clock_ >= params_.time_limit) {
        finish(out, SessionStatus::TimeUp, params_.time_limit);
        return out;
    }

    const Tool& tool = *spec_->find_tool(active_tool_);
    const CarveResult carved = grid_.carve(tool.brush, stroke.pose);
    ++strokes_;
    emit(out, clock_,
         StrokeApplied{tool.name, carved.removed_volume, carved.cells_changed, carved.cells_emptied,
                       carved.artifact_contact});

    if (carved.artifact_contact &&
        (!last_hit_time_ || clock_ - *last_hit_time_ >= params_.hit_cooldown)) {
        health_ = std::max(0, health_ - params_.hit_penalty);
        ++hits_;
        last_hit_time_ = clock_;
        emit(out, clock_, HitEvent{carved.contact_point.value_or(stroke.pose.position), health_});
    }

    if (!trigger_cells_.empty() && !carved.emptied_cells.empty()) {
        std::vector<std::size_t> fired;
        const GridShape& shape = grid_.shape();
        for (const Int3& cell : carved.emptied_cells) {
            const std::size_t idx = shape.index(cell);
            auto it = std::lower_bound(trigger_cells_.begin(), trigger_cells_.end(), std::make_pair(idx, std::size_t{0}));
            for (; it != trigger_cells_.end() && it->first == idx; ++it) {
                if (!trigger_revealed_[it->second]) {
                    fired.push_back(it->second);
                }
            }
        }
        std::sort(fired.begin(), fired.end());
        fired.erase(std::unique(fired.begin(), fired.end()), fired.end());
        for (const std::size_t n : fired) {
            trigger_revealed_[n] = true;
            revealed_ids_.push_back(spec_->triggers[n].id);
            emit(out, clock_, TriggerRevealed{spec_->triggers[n].id, spec_->triggers[n].dialog});
        }
    }

    const std::size_t total = grid_.artifact_surface_cells().size();
    const int decile = static_cast<int>(grid_.exposed_surface_count() * 10 / total);
    while (decile_ < decile) {
        ++decile_;
        emit(out, clock_, ExposureMilestone{decile_});
    }
    if (exposure() >= params_.completion_exposure) {
        // Completion shows every dialog: reveal whatever is still buried first.
        for (std::size_t n = 0; n < spec_->triggers.size(); ++n) {
            if (!trigger_revealed_[n]) {
                trigger_revealed_[n] = true;
                revealed_ids_.push_back(spec_->triggers[n].id);
                emit(out, clock_, TriggerRevealed{spec_->triggers[n].id, spec_->triggers[n].dialog});
            }
        }
        finish(out, SessionStatus::Completed, clock_);
    }
    return out;
}

Session start_session(const ArtifactSpec& spec, std::uint64_t seed) {
    return Session(std::make_shared<const ArtifactSpec>(spec), seed);
}

std::string serialize_event(const Event& event) { return json_io::event(event).dump(); }

std::string serialize_event_log(const std::vector<Event>& events) {
    std::string out;
    for (const Event& e : events) {
        out += serialize_event(e);
        out += '\n';
    }
    return out;
}

std::string serialize_report(const SessionReport& report) { return json_io::report(report).dump(); }

}  // namespace diglab
