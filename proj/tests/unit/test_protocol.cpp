#include <bit>
#include <cstring>
#include <random>

#include "diglab/error.hpp"
#include "diglab/protocol.hpp"
#include "doctest.h"

using namespace diglab;
using namespace diglab::protocol;

namespace {

MeshChunk random_chunk(std::mt19937_64& rng, bool any_bits) {
    MeshChunk c;
    c.coord = {static_cast<int>(rng() % 7), static_cast<int>(rng() % 7), static_cast<int>(rng() % 7)};
    c.version = rng() % 1000;
    const std::size_t verts = 1 + rng() % 50;
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (std::size_t i = 0; i < verts * 3; ++i) {
        if (any_bits) {
            c.positions.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(rng())));
            c.normals.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(rng())));
        } else {
            c.positions.push_back(u(rng));
            c.normals.push_back(u(rng));
        }
    }
    const std::size_t index_count = 3 * (rng() % 40);
    for (std::size_t i = 0; i < index_count; ++i) {
        c.indices.push_back(static_cast<std::uint32_t>(rng() % verts));
    }
    return c;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("ping round-trip") {
    const ClientMessage ping{5.0, Ping{5.0}};
    const std::string frame = encode(ping);
    CHECK(decode_client(frame) == ping);
    CHECK(type_name(ping) == "ping");
    CHECK(frame.find("\"type\"") != std::string::npos);
    CHECK(frame.find("\"session_time\"") != std::string::npos);
    const ServerMessage pong{1.5, Pong{5.0}};
    CHECK(decode_server(encode(pong)) == pong);
}

TEST_CASE("malformed frames") {
    const std::string frame = encode(ClientMessage{0.0, Ping{5.0}});
    for (std::size_t cut = 0; cut < frame.size(); ++cut) {
        CHECK_THROWS_AS(decode_client(frame.substr(0, cut)), ParseError);
    }
    CHECK_THROWS_AS(decode_client(R"({"type":"dance","session_time":0})"), ParseError);
    CHECK_THROWS_AS(decode_client(R"({"type":"ping","session_time":0,"t":1,"extra":2})"), ParseError);
    CHECK_THROWS_AS(decode_client(R"({"type":"ping","session_time":0})"), ParseError);
    CHECK_THROWS_AS(decode_client(R"({"type":"select_tool","session_time":0,"name":7})"), ParseError);
    CHECK_THROWS_AS(decode_client("[1,2,3]"), ParseError);
    CHECK_THROWS_AS(decode_server(R"({"type":"ping","session_time":0,"t":1})"), ParseError);
    CHECK_THROWS_AS(base64_decode("@@@@"), ParseError);
}

TEST_CASE("client messages round-trip") {
    SessionParams p;
    p.time_limit = 60.0;
    const std::vector<ClientMessage> msgs{
        {0.0, CreateSession{"gold_mask", std::nullopt}},
        {0.1, CreateSession{"arhat", p}},
        {1.25, ApplyStroke{Stroke{1.25, Pose{{0.1, -0.2, 0.3}, Quat{0.5, 0.5, -0.5, 0.5}}}}},
        {2.0, SelectTool{"shovel"}},
        {3.0, SubscribeMesh{}},
    };
    for (const auto& m : msgs) {
        CHECK(decode_client(encode(m)) == m);
    }
    CHECK(type_name(msgs[0]) == "create_session");
    CHECK(type_name(msgs[2]) == "apply_stroke");
    CHECK(type_name(msgs[3]) == "select_tool");
    CHECK(type_name(msgs[4]) == "subscribe_mesh");
}

TEST_CASE("server messages round-trip") {
    std::mt19937_64 rng(1);
    const ArtifactSpec spec = builtin_relics()[1];
    Session s = start_session(spec, 0);
    s.apply_stroke(Stroke{1.0, Pose{{0.0, 0.9, 0.0}, Quat::identity()}});
    std::vector<ServerMessage> msgs{
        {0.0, SessionCreated{"s-1", {random_chunk(rng, false)}, s.grid().shape(), spec.tools, spec.session}},
        {0.5, MeshDelta{{random_chunk(rng, false), random_chunk(rng, false), MeshChunk{{1, 2, 3}, 4, {}, {}, {}}}}},
        {0.7, State{39, 400.5, 0.125}},
        {0.8, ErrorMessage{"NO_SESSION", "create a session first"}},
    };
    for (const Event& e : s.events()) {
        msgs.push_back({e.t, EventMessage{e}});
    }
    for (const auto& m : msgs) {
        CHECK(decode_server(encode(m)) == m);
    }
    CHECK(type_name(msgs[0]) == "session_created");
    CHECK(type_name(msgs[1]) == "mesh_delta");
    CHECK(type_name(msgs[2]) == "state");
    CHECK(type_name(msgs[3]) == "error");
    CHECK(type_name(msgs[4]) == "event");
}

TEST_CASE("mesh delta preserves every float bit") {
    std::mt19937_64 rng(77);
    for (int n = 0; n < 50; ++n) {
        MeshDelta d;
        for (int k = 0; k < 3; ++k) {
            d.chunks.push_back(random_chunk(rng, true));
        }
        const ServerMessage back = decode_server(encode(ServerMessage{0.0, d}));
        const auto& got = std::get<MeshDelta>(back.body).chunks;
        REQUIRE(got.size() == d.chunks.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].coord == d.chunks[k].coord);
            CHECK(got[k].version == d.chunks[k].version);
            CHECK(bit_equal(got[k].positions, d.chunks[k].positions));
            CHECK(bit_equal(got[k].normals, d.chunks[k].normals));
            CHECK(got[k].indices == d.chunks[k].indices);
        }
    }
}

TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    CHECK(base64_decode("Zm9vYg==") == "foob");
    std::mt19937_64 rng(3);
    for (int n = 0; n < 100; ++n) {
        std::string bytes(rng() % 64, '\0');
        for (char& c : bytes) {
            c = static_cast<char>(rng());
        }
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
}
