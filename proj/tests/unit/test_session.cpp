#include <memory>
#include <string>

#include "diglab/error.hpp"
#include "diglab/replay.hpp"
#include "diglab/session.hpp"
#include "doctest.h"

using namespace diglab;

namespace {

std::shared_ptr<const ArtifactSpec> sphere_spec() {
    static const auto spec =
        std::make_shared<const ArtifactSpec>(load_spec_file(std::string(DIGLAB_FIXTURE_DIR) + "/sphere.json"));
    return spec;
}

std::shared_ptr<const ArtifactSpec> gold_mask() {
    static const auto spec = std::make_shared<const ArtifactSpec>(builtin_relics()[1]);
    return spec;
}

Stroke at(double t, Vec3 p) { return Stroke{t, Pose{p, Quat::identity()}}; }

const Vec3 kDeep{0.4, -0.4, 0.4};
const Vec3 kTop{0.0, 0.3, 0.0};

template <class T>
std::size_t count(const std::vector<Event>& events) {
    std::size_t n = 0;
    for (const Event& e : events) {
        n += e.is<T>() ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("fresh gold_mask session") {
    Session s = start_session(*gold_mask(), 3);
    CHECK(s.health() == 40);
    CHECK(s.clock() == 0.0);
    CHECK(s.exposure() == 0.0);
    CHECK(s.stroke_count() == 0);
    CHECK(s.events().empty());
    CHECK(s.inputs().empty());
    CHECK(s.running());
    CHECK(s.active_tool() == "hammer");
    CHECK(s.params().time_limit == 420.0);
    CHECK(s.params().hit_penalty == 1);
    CHECK(s.seed() == 3);
    CHECK_FALSE(s.artifact_mesh().empty());
    CHECK_THROWS_AS((void)s.final_report(), SessionError);
    CHECK(s.current_report().status == SessionStatus::Running);
}

TEST_CASE("deep earth stroke only reports the carve") {
    Session s(sphere_spec(), 0);
    const auto ev = s.apply_stroke(at(1.0, kDeep));
    REQUIRE(ev.size() == 1);
    REQUIRE(ev[0].is<StrokeApplied>());
    CHECK(ev[0].t == 1.0);
    CHECK(ev[0].as<StrokeApplied>().tool == "hammer");
    CHECK(ev[0].as<StrokeApplied>().removed_volume > 0.0);
    CHECK_FALSE(ev[0].as<StrokeApplied>().artifact_contact);
    CHECK(s.health() == 40);
    CHECK(s.clock() == 1.0);
    CHECK(s.stroke_count() == 1);
}

TEST_CASE("contact costs one health point, debounced by the cooldown") {
    Session s(sphere_spec(), 0);
    auto ev = s.apply_stroke(at(1.0, kTop));
    REQUIRE(ev.size() >= 2);
    REQUIRE(ev[1].is<HitEvent>());
    CHECK(ev[1].as<HitEvent>().health_after == 39);
    CHECK(s.health() == 39);
    CHECK(eval_sdf(*sphere_spec()->geometry, ev[1].as<HitEvent>().contact_point) <= 0.0);

    ev = s.apply_stroke(at(1.1, kTop));
    CHECK(count<HitEvent>(ev) == 0);
    CHECK(ev[0].as<StrokeApplied>().artifact_contact);
    CHECK(s.health() == 39);

    ev = s.apply_stroke(at(1.3, kTop));
    CHECK(count<HitEvent>(ev) == 1);
    CHECK(s.health() == 38);
    CHECK(s.hits() == 2);
    CHECK(s.last_hit_time() == std::optional<double>(1.3));
}

TEST_CASE("health floors at zero without ending the session") {
    SessionParams p;
    p.max_health = 2;
    p.hit_cooldown = 0.0;
    Session s(sphere_spec(), 0, p);
    for (int n = 0; n < 5; ++n) {
        s.apply_stroke(at(1.0 + n, kTop));
    }
    CHECK(s.hits() == 5);
    CHECK(s.health() == 0);
    CHECK(s.running());
}

TEST_CASE("time limit") {
    Session s(sphere_spec(), 0);
    const auto ev = s.apply_stroke(at(421.0, kDeep));
    REQUIRE(ev.size() == 1);
    REQUIRE(ev[0].is<TimeUpEvent>());
    CHECK(ev[0].t == 420.0);
    CHECK(s.status() == SessionStatus::TimeUp);
    CHECK(s.stroke_count() == 0);
    CHECK(s.grid().removed_total() == 0.0);
    CHECK_THROWS_AS(s.apply_stroke(at(422.0, kDeep)), SessionError);
    CHECK_THROWS_AS(s.select_tool("shovel"), SessionError);
    CHECK(s.tick(500.0).empty());
    const SessionReport r = s.final_report();
    CHECK(r.status == SessionStatus::TimeUp);
    CHECK(r.exposure < s.params().completion_exposure);
    CHECK(r.duration == 420.0);
}

TEST_CASE("ticks") {
    Session s(sphere_spec(), 0);
    CHECK(s.tick(100.0).empty());
    CHECK(s.tick(200.0).empty());
    CHECK(s.clock() == 200.0);
    CHECK_THROWS_AS(s.tick(150.0), SessionError);
    CHECK_THROWS_AS(s.apply_stroke(at(150.0, kDeep)), SessionError);
    CHECK(s.tick(419.999).empty());
    const auto ev = s.tick(420.0);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].is<TimeUpEvent>());
    CHECK(s.status() == SessionStatus::TimeUp);
    CHECK(s.tick(421.0).empty());
}

TEST_CASE("tool selection") {
    Session s(sphere_spec(), 0);
    CHECK_THROWS_AS(s.select_tool("pickaxe"), UnknownToolError);
    CHECK_NOTHROW(s.select_tool("hammer"));
    CHECK(s.active_tool() == "hammer");
    s.select_tool("shovel");
    const Pose pose{kDeep, Quat::from_axis_angle({0, 0, 1}, 0.5)};
    const auto ev = s.apply_stroke(Stroke{1.0, pose});
    REQUIRE(ev[0].is<StrokeApplied>());
    CHECK(ev[0].as<StrokeApplied>().tool == "shovel");

    VoxelGrid ref = init_grid(1.0, 0.02, sphere_spec()->geometry);
    const CarveResult r = ref.carve(shovel_tool().brush, pose);
    CHECK(ev[0].as<StrokeApplied>().cells_changed == r.cells_changed);
    CHECK(ev[0].as<StrokeApplied>().removed_volume == r.removed_volume);
}

TEST_CASE("trigger fires when its cell is dug out, once") {
    Session s(sphere_spec(), 0);
    auto ev = s.apply_stroke(at(1.0, {0.01, 0.36, 0.01}));
    REQUIRE(count<TriggerRevealed>(ev) == 1);
    const auto& tr = ev.back().is<TriggerRevealed>() ? ev.back() : ev[ev.size() - 2];
    CHECK(tr.as<TriggerRevealed>().trigger_id == "north");
    CHECK(tr.as<TriggerRevealed>().dialog.title == "North");
    ev = s.apply_stroke(at(2.0, {0.01, 0.36, 0.01}));
    CHECK(count<TriggerRevealed>(ev) == 0);
    CHECK(s.revealed_trigger_ids() == std::vector<std::string>{"north"});
}

TEST_CASE("scripted completion with two hits") {
    const Stroke first = at(1.0, {0.0, 0.32, 0.0});
    const Stroke second = at(2.0, {0.0, -0.32, 0.0});
    double e1 = 0;
    double e2 = 0;
    {
        Session dry(sphere_spec(), 0);
        dry.apply_stroke(first);
        e1 = dry.exposure();
        dry.apply_stroke(second);
        e2 = dry.exposure();
    }
    REQUIRE(e1 < e2);
    SessionParams p;
    p.completion_exposure = (e1 + e2) / 2;
    Session s(sphere_spec(), 0, p);
    s.apply_stroke(first);
    REQUIRE(s.running());
    const auto ev = s.apply_stroke(second);
    CHECK(s.status() == SessionStatus::Completed);
    REQUIRE(ev.back().is<CompletedEvent>());
    CHECK(ev.back().as<CompletedEvent>().dialog == sphere_spec()->completion_dialog);
    // unrevealed triggers are shown before the completion dialog
    CHECK(count<TriggerRevealed>(s.events()) == 3);
    const SessionReport r = s.final_report();
    CHECK(r.status == SessionStatus::Completed);
    CHECK(r.hits_taken == 2);
    CHECK(r.health == 38);
    CHECK(r.strokes == 2);
    CHECK(r.triggers_revealed == 3);
    CHECK(r.duration == 2.0);
    CHECK(ev.back().as<CompletedEvent>().stats == r);
    CHECK(s.tick(3.0).empty());
    CHECK_THROWS_AS(s.apply_stroke(at(3.0, kDeep)), SessionError);
}

TEST_CASE("identical scripts give identical logs, and replays reproduce them") {
    auto script = [](Session& s) {
        s.apply_stroke(at(0.5, kDeep));
        s.select_tool("shovel");
        s.apply_stroke(Stroke{0.9, Pose{{0.2, 0.3, -0.1}, Quat::from_axis_angle({1, 0, 0}, 1.0)}});
        s.tick(2.0);
        s.select_tool("hammer");
        s.apply_stroke(at(2.5, kTop));
        s.apply_stroke(at(600.0, kTop));
    };
    Session a(sphere_spec(), 42);
    Session b(sphere_spec(), 42);
    script(a);
    script(b);
    CHECK(serialize_event_log(a.events()) == serialize_event_log(b.events()));
    CHECK(a.status() == SessionStatus::TimeUp);

    const std::string doc = export_replay(a);
    CHECK(doc == export_replay(b));
    const auto r = replay_session(doc, *sphere_spec());
    CHECK(serialize_event_log(r->events()) == serialize_event_log(a.events()));
    CHECK(r->inputs() == a.inputs());
    CHECK(replay(doc, *sphere_spec()) == a.final_report());
    CHECK(export_replay(*r) == doc);

    CHECK_THROWS_AS(replay(doc, *gold_mask()), ReplayMismatchError);
    CHECK_THROWS_AS(replay(doc.substr(0, doc.size() / 2) + "\n{bad", *sphere_spec()), ParseError);
    CHECK_THROWS_AS(replay("", *sphere_spec()), ParseError);
}

TEST_CASE("empty session replays to a zero-stroke time-up") {
    Session s(sphere_spec(), 1);
    s.tick(420.0);
    const SessionReport r = replay(export_replay(s), *sphere_spec());
    CHECK(r.strokes == 0);
    CHECK(r.status == SessionStatus::TimeUp);
    CHECK(r.health == 40);
}

TEST_CASE("unfinished replay has no final report") {
    Session s(sphere_spec(), 1);
    s.apply_stroke(at(1.0, kDeep));
    CHECK_THROWS_AS(replay(export_replay(s), *sphere_spec()), SessionError);
}

TEST_CASE("params validation") {
    SessionParams p;
    CHECK_NOTHROW(p.validate());
    p.completion_exposure = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.max_health = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.hit_cooldown = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.time_limit = 0;
    CHECK_THROWS_AS(Session(sphere_spec(), 0, p), ValidationError);
}

TEST_CASE("event serialization is stable") {
    Session s(sphere_spec(), 0);
    s.apply_stroke(at(1.0, kTop));
    const std::string log = serialize_event_log(s.events());
    std::size_t lines = 0;
    for (const char c : log) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == s.events().size());
    CHECK(log.find("\"hit\"") != std::string::npos);
    CHECK(serialize_event(s.events()[0]) + "\n" == log.substr(0, log.find('\n') + 1));
}
