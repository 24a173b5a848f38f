#include <chrono>
#include <map>
#include <mutex>
#include <thread>

#include "diglab/error.hpp"
#include "diglab/protocol.hpp"
#include "diglab/service.hpp"
#include "doctest.h"
#include "ws_client.hpp"

using namespace diglab;
using namespace diglab::protocol;

namespace {

struct Server {
    std::mutex mu;
    std::vector<std::string> closed_logs;
    DigService service;

    Server()
        : service(builtin_catalog(), [this] {
              ServiceOptions o;
              o.port = 0;
              o.io_threads = 2;
              o.mesh_workers = 2;
              o.on_session_closed = [this](const Session& s) {
                  std::lock_guard lock(mu);
                  closed_logs.push_back(serialize_event_log(s.events()));
              };
              return o;
          }()) {
        service.start();
    }

    std::vector<std::string> logs() {
        std::lock_guard lock(mu);
        return closed_logs;
    }
};

std::shared_ptr<const ArtifactSpec> gold_mask() { return builtin_catalog().at("gold_mask"); }

ErrorMessage expect_error(wsclient::Client& c) {
    auto e = c.recv_until<ErrorMessage>();
    REQUIRE(e.has_value());
    return *e;
}

/// Reads up to and including the PONG for `t`, returning everything else but STATE.
std::vector<ServerMessage> drain(wsclient::Client& c, double t) {
    c.send(Ping{t});
    std::vector<ServerMessage> out;
    while (auto m = c.recv()) {
        if (const auto* p = std::get_if<Pong>(&m->body); p && p->t == t) {
            return out;
        }
        if (!std::holds_alternative<State>(m->body)) {
            out.push_back(*m);
        }
    }
    FAIL("connection ended before pong");
    return out;
}

}  // namespace

TEST_CASE("commands before a session are refused") {
    Server server;
    wsclient::Client c(server.service.port());
    c.send(ApplyStroke{Stroke{0.0, Pose{}}});
    CHECK(expect_error(c).code == "NO_SESSION");
    c.send(SelectTool{"shovel"});
    CHECK(expect_error(c).code == "NO_SESSION");
    c.send(SubscribeMesh{});
    CHECK(expect_error(c).code == "NO_SESSION");
    c.send(Ping{2.5});
    const auto pong = c.recv_until<Pong>();
    REQUIRE(pong.has_value());
    CHECK(pong->t == 2.5);
}

TEST_CASE("session creation, mesh subscription and a single stroke") {
    Server server;
    wsclient::Client c(server.service.port());
    c.send(CreateSession{"gold_mask", std::nullopt});
    const auto created = c.recv_until<SessionCreated>();
    REQUIRE(created.has_value());
    CHECK(created->tools.size() == 2);
    CHECK(created->params.time_limit == 420.0);
    CHECK(created->params.max_health == 40);
    CHECK(created->params.hit_penalty == 1);
    CHECK_FALSE(created->session_id.empty());

    Session local(gold_mask(), 0);
    CHECK(created->grid == local.grid().shape());
    REQUIRE(created->artifact_mesh.size() == local.artifact_mesh().size());
    for (std::size_t i = 0; i < created->artifact_mesh.size(); ++i) {
        CHECK(created->artifact_mesh[i].same_geometry(local.artifact_mesh()[i]));
    }
    local.remesh_dirty();

    const auto state = c.recv_until<State>();
    REQUIRE(state.has_value());
    CHECK(state->health == 40);
    CHECK(state->clock_remaining <= 420.0);
    CHECK(state->clock_remaining > 400.0);
    CHECK(state->exposure == 0.0);

    c.send(SubscribeMesh{});
    const auto initial = c.recv_until<MeshDelta>();
    REQUIRE(initial.has_value());
    const auto expect_initial = local.earth_mesh();
    REQUIRE(initial->chunks.size() == expect_initial.size());
    for (std::size_t i = 0; i < expect_initial.size(); ++i) {
        CHECK(initial->chunks[i] == expect_initial[i]);
    }

    const Pose pose{local.grid().shape().center(22, 22, 22), Quat::identity()};
    local.apply_stroke(Stroke{1.0, pose});
    const auto expect = local.remesh_dirty();
    REQUIRE(expect.size() == 1);
    c.send(ApplyStroke{Stroke{123.0, pose}});
    const auto msgs = drain(c, 9.0);
    REQUIRE(msgs.size() >= 2);
    const auto* delta = std::get_if<MeshDelta>(&msgs[0].body);
    REQUIRE(delta != nullptr);
    REQUIRE(delta->chunks.size() == expect.size());
    CHECK(delta->chunks[0] == expect[0]);
    const auto* ev = std::get_if<EventMessage>(&msgs[1].body);
    REQUIRE(ev != nullptr);
    REQUIRE(ev->event.is<StrokeApplied>());
    CHECK(ev->event.as<StrokeApplied>().cells_changed > 0);
    // client time is advisory
    CHECK(ev->event.t < 60.0);
}

TEST_CASE("no mesh before subscribing") {
    Server server;
    wsclient::Client c(server.service.port());
    c.send(CreateSession{"gold_mask", std::nullopt});
    REQUIRE(c.recv_until<SessionCreated>().has_value());
    c.send(ApplyStroke{Stroke{0.0, Pose{{0.7, 0.7, 0.7}, Quat::identity()}}});
    for (const auto& m : drain(c, 1.0)) {
        CHECK_FALSE(std::holds_alternative<MeshDelta>(m.body));
    }
    c.send(SubscribeMesh{});
    const auto d = c.recv_until<MeshDelta>();
    REQUIRE(d.has_value());
    CHECK(d->chunks.size() > 10);
}

TEST_CASE("error codes") {
    Server server;
    {
        wsclient::Client c(server.service.port());
        c.send(CreateSession{"statue", std::nullopt});
        CHECK(expect_error(c).code == "UNKNOWN_RELIC");
        SessionParams bad;
        bad.max_health = -3;
        c.send(CreateSession{"gold_mask", bad});
        CHECK(expect_error(c).code == "BAD_PARAMS");
        c.send(CreateSession{"arhat", std::nullopt});
        REQUIRE(c.recv_until<SessionCreated>().has_value());
        c.send(CreateSession{"arhat", std::nullopt});
        CHECK(expect_error(c).code == "SESSION_EXISTS");
        c.send(SelectTool{"pickaxe"});
        CHECK(expect_error(c).code == "UNKNOWN_TOOL");
        c.send(SelectTool{"shovel"});
        c.send(ApplyStroke{Stroke{0.0, Pose{{0.7, 0.7, 0.7}, Quat::identity()}}});
        const auto ev = c.recv_until<EventMessage>();
        REQUIRE(ev.has_value());
        CHECK(ev->event.as<StrokeApplied>().tool == "shovel");
    }
    {
        wsclient::Client c(server.service.port());
        SessionParams quick;
        quick.time_limit = 0.3;
        c.send(CreateSession{"gold_mask", quick});
        REQUIRE(c.recv_until<SessionCreated>().has_value());
        const auto ev = c.recv_until<EventMessage>();
        REQUIRE(ev.has_value());
        CHECK(ev->event.is<TimeUpEvent>());
        CHECK(ev->event.t >= 0.3);
        c.send(ApplyStroke{Stroke{0.0, Pose{}}});
        CHECK(expect_error(c).code == "SESSION_OVER");
    }
}

TEST_CASE("malformed frame closes the connection") {
    Server server;
    wsclient::Client c(server.service.port());
    c.send(CreateSession{"gold_mask", std::nullopt});
    REQUIRE(c.recv_until<SessionCreated>().has_value());
    c.send_text(R"({"type":"apply_stroke","session_time":0,"t":1,"pose":{"position":[0,0)");
    CHECK(expect_error(c).code == "BAD_FRAME");
    while (c.recv()) {
    }
    CHECK(c.closed_by_peer());
    for (int n = 0; n < 100 && server.logs().empty(); ++n) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(server.logs().size() == 1);
}

TEST_CASE("event stream mirrors the engine log") {
    Server server;
    std::string streamed;
    {
        wsclient::Client c(server.service.port());
        c.send(CreateSession{"gold_mask", std::nullopt});
        REQUIRE(c.recv_until<SessionCreated>().has_value());
        c.send(SubscribeMesh{});
        for (int n = 0; n < 40; ++n) {
            const double a = 0.15 * n;
            c.send(ApplyStroke{Stroke{0.0, Pose{{0.6 * std::cos(a), 0.5 - 0.02 * n, 0.6 * std::sin(a)}, Quat::identity()}}});
        }
        std::map<Int3, std::uint64_t> versions;
        for (const auto& m : drain(c, 77.0)) {
            if (const auto* e = std::get_if<EventMessage>(&m.body)) {
                streamed += serialize_event(e->event) + "\n";
            } else if (const auto* d = std::get_if<MeshDelta>(&m.body)) {
                for (const MeshChunk& ch : d->chunks) {
                    CHECK(ch.version > versions[ch.coord]);
                    versions[ch.coord] = ch.version;
                }
            }
        }
    }
    for (int n = 0; n < 200 && server.logs().empty(); ++n) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(server.logs().size() == 1);
    CHECK(server.logs()[0] == streamed);
}

TEST_CASE("lifecycle") {
    Server server;
    CHECK(server.service.port() != 0);
    {
        wsclient::Client a(server.service.port());
        wsclient::Client b(server.service.port());
        a.send(Ping{1.0});
        b.send(Ping{2.0});
        CHECK(a.recv_until<Pong>()->t == 1.0);
        CHECK(b.recv_until<Pong>()->t == 2.0);
        CHECK(server.service.connection_count() == 2);
    }
    ServiceOptions o;
    o.port = server.service.port();
    DigService clash(builtin_catalog(), o);
    CHECK_THROWS_AS(clash.start(), Error);
    server.service.stop();
    server.service.stop();
}

TEST_CASE("catalog directory") {
    const Catalog c = load_catalog(DIGLAB_CATALOG_DIR);
    REQUIRE(c.size() == 2);
    CHECK(*c.at("arhat") == *builtin_catalog().at("arhat"));
    CHECK_THROWS_AS(load_catalog("/nonexistent/dir"), IoError);
}
