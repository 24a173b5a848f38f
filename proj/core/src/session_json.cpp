#include "session_json.hpp"

#include "diglab/error.hpp"

namespace diglab::json_io {

SessionStatus status(const std::string& text, const std::string& path) {
    if (text == "running") {
        return SessionStatus::Running;
    }
    if (text == "completed") {
        return SessionStatus::Completed;
    }
    if (text == "time_up") {
        return SessionStatus::TimeUp;
    }
    throw ParseError(path, "unknown status '" + text + "'");
}

Json report(const SessionReport& r) {
    return Json{{"status", std::string(to_string(r.status))},
                {"duration_s", r.duration},
                {"hits_taken", r.hits_taken},
                {"health", r.health},
                {"exposure", r.exposure},
                {"strokes", r.strokes},
                {"triggers_revealed", r.triggers_revealed},
                {"removed_volume_m3", r.removed_volume}};
}

SessionReport report(const Json& j, const std::string& path) {
    require_object(j, path,
                   {"status", "duration_s", "hits_taken", "health", "exposure", "strokes", "triggers_revealed",
                    "removed_volume_m3"});
    SessionReport r;
    r.status = status(string_at(j, path, "status"), path + "/status");
    r.duration = number_at(j, path, "duration_s");
    r.hits_taken = static_cast<int>(integer_at(j, path, "hits_taken"));
    r.health = static_cast<int>(integer_at(j, path, "health"));
    r.exposure = number_at(j, path, "exposure");
    r.strokes = static_cast<std::size_t>(integer_at(j, path, "strokes"));
    r.triggers_revealed = static_cast<std::size_t>(integer_at(j, path, "triggers_revealed"));
    r.removed_volume = number_at(j, path, "removed_volume_m3");
    return r;
}

Json event(const Event& e) {
    Json j{{"t", e.t}, {"type", std::string(e.kind())}};
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, StrokeApplied>) {
                j["tool"] = b.tool;
                j["removed_volume"] = b.removed_volume;
                j["cells_changed"] = b.cells_changed;
                j["cells_emptied"] = b.cells_emptied;
                j["artifact_contact"] = b.artifact_contact;
            } else if constexpr (std::is_same_v<T, HitEvent>) {
                j["contact_point"] = vec3(b.contact_point);
                j["health_after"] = b.health_after;
            } else if constexpr (std::is_same_v<T, TriggerRevealed>) {
                j["trigger_id"] = b.trigger_id;
                j["dialog"] = dialog(b.dialog);
            } else if constexpr (std::is_same_v<T, ExposureMilestone>) {
                j["decile"] = b.decile;
            } else if constexpr (std::is_same_v<T, CompletedEvent>) {
                j["dialog"] = dialog(b.dialog);
                j["stats"] = report(b.stats);
            } else {
                j["stats"] = report(b.stats);
            }
        },
        e.body);
    return j;
}

Event event(const Json& j, const std::string& path) {
    Event e;
    e.t = number_at(j, path, "t");
    const std::string type = string_at(j, path, "type");
    if (type == "stroke_applied") {
        require_object(j, path, {"t", "type", "tool", "removed_volume", "cells_changed", "cells_emptied",
                                 "artifact_contact"});
        StrokeApplied b;
        b.tool = string_at(j, path, "tool");
        b.removed_volume = number_at(j, path, "removed_volume");
        b.cells_changed = static_cast<std::size_t>(integer_at(j, path, "cells_changed"));
        b.cells_emptied = static_cast<std::size_t>(integer_at(j, path, "cells_emptied"));
        b.artifact_contact = boolean_at(j, path, "artifact_contact");
        e.body = std::move(b);
    } else if (type == "hit") {
        require_object(j, path, {"t", "type", "contact_point", "health_after"});
        e.body = HitEvent{vec3(field(j, path, "contact_point"), path + "/contact_point"),
                          static_cast<int>(integer_at(j, path, "health_after"))};
    } else if (type == "trigger_revealed") {
        require_object(j, path, {"t", "type", "trigger_id", "dialog"});
        e.body = TriggerRevealed{string_at(j, path, "trigger_id"), dialog(field(j, path, "dialog"), path + "/dialog")};
    } else if (type == "exposure_milestone") {
        require_object(j, path, {"t", "type", "decile"});
        e.body = ExposureMilestone{static_cast<int>(integer_at(j, path, "decile"))};
    } else if (type == "completed") {
        require_object(j, path, {"t", "type", "dialog", "stats"});
        e.body = CompletedEvent{dialog(field(j, path, "dialog"), path + "/dialog"),
                                report(field(j, path, "stats"), path + "/stats")};
    } else if (type == "time_up") {
        require_object(j, path, {"t", "type", "stats"});
        e.body = TimeUpEvent{report(field(j, path, "stats"), path + "/stats")};
    } else {
        throw ParseError(path + "/type", "unknown event type '" + type + "'");
    }
    return e;
}

}  // namespace diglab::json_io
