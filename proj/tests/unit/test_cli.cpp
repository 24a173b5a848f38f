#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "diglab/artifact.hpp"
#include "doctest.h"
#include "json.hpp"
#include "ws_client.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "diglab");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = diglab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const char* name) { return std::string(DIGLAB_FIXTURE_DIR) + "/" + name; }
std::string catalog(const char* name) { return std::string(DIGLAB_CATALOG_DIR) + "/" + name; }

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        char tmpl[] = "/tmp/diglab-cli-XXXXXX";
        path = mkdtemp(tmpl);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

/// Child process running the CLI binary with stdout on a pipe.
struct Child {
    pid_t pid = -1;
    FILE* out = nullptr;

    explicit Child(const std::vector<std::string>& args) {
        int fds[2];
        REQUIRE(pipe(fds) == 0);
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
        posix_spawn_file_actions_addclose(&actions, fds[0]);
        std::vector<char*> argv;
        std::vector<std::string> storage{DIGLAB_CLI_PATH};
        storage.insert(storage.end(), args.begin(), args.end());
        for (auto& s : storage) {
            argv.push_back(s.data());
        }
        argv.push_back(nullptr);
        REQUIRE(posix_spawn(&pid, DIGLAB_CLI_PATH, &actions, nullptr, argv.data(), environ) == 0);
        posix_spawn_file_actions_destroy(&actions);
        close(fds[1]);
        out = fdopen(fds[0], "r");
    }

    std::string line() {
        char buf[512];
        return fgets(buf, sizeof buf, out) ? std::string(buf) : std::string{};
    }

    int wait() {
        int status = 0;
        waitpid(pid, &status, 0);
        pid = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    ~Child() {
        if (pid > 0) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
        }
        if (out != nullptr) {
            fclose(out);
        }
    }
};

std::uint16_t port_of(const std::string& listening) {
    return static_cast<std::uint16_t>(std::stoi(listening.substr(listening.rfind(':') + 1)));
}

}  // namespace

TEST_CASE("usage and help") {
    CHECK(cli({}).code == diglab::cli::kExitUsage);
    CHECK(cli({"frobnicate"}).code == diglab::cli::kExitUsage);
    CHECK(cli({"--help"}).code == 0);
    for (const char* cmd : {"validate", "simulate", "mesh", "replay", "serve", "export-catalog"}) {
        const Result r = cli({cmd, "--help"});
        CHECK(r.code == 0);
        CHECK(r.out.find(cmd) != std::string::npos);
    }
    CHECK(cli({"validate"}).code == diglab::cli::kExitUsage);
    CHECK(cli({"simulate", fixture("sphere.json"), "--policy", "greedy"}).code == diglab::cli::kExitUsage);
    CHECK(cli({"simulate", fixture("sphere.json"), "--seed", "abc"}).code == diglab::cli::kExitUsage);
}

TEST_CASE("validate") {
    Result r = cli({"validate", catalog("gold_mask.json")});
    CHECK(r.code == 0);
    CHECK(r.out.find("gold_mask") != std::string::npos);

    r = cli({"validate", fixture("trigger_inside.json")});
    CHECK(r.code == diglab::cli::kExitInvalid);
    CHECK((r.out + r.err).find("core") != std::string::npos);

    r = cli({"validate", fixture("trigger_inside.json"), "--json"});
    CHECK(r.code == diglab::cli::kExitInvalid);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("valid") == false);

    CHECK(cli({"validate", fixture("two_triggers.json")}).code == diglab::cli::kExitInvalid);
    CHECK(cli({"validate", fixture("bad_syntax.json")}).code == diglab::cli::kExitInvalid);
    CHECK(cli({"validate", fixture("empty_sdf.json")}).code == diglab::cli::kExitInvalid);
    CHECK(cli({"validate", fixture("does_not_exist.json")}).code == diglab::cli::kExitIo);
}

TEST_CASE("simulate writes reproducible run directories") {
    TempDir a;
    TempDir b;
    const std::vector<std::string> common{"simulate", fixture("sphere.json"), "--policy", "risk-averse", "--seed", "7"};
    auto args = common;
    args.insert(args.end(), {"--out", a.path.string()});
    const Result ra = cli(args);
    REQUIRE(ra.code == 0);
    args = common;
    args.insert(args.end(), {"--out", b.path.string()});
    REQUIRE(cli(args).code == 0);

    const std::string hash = diglab::spec_hash(diglab::load_spec_file(fixture("sphere.json")));
    const std::string name = "sphere-seed7-" + hash.substr(0, 8);
    const fs::path da = a.path / name;
    const fs::path db = b.path / name;
    for (const char* f : {"replay.jsonl", "events.jsonl", "metrics.csv", "summary.json", "earth.obj", "artifact.obj"}) {
        REQUIRE(fs::exists(da / f));
        CHECK(read(da / f) == read(db / f));
    }
    const std::string csv = read(da / "metrics.csv");
    const std::string row = csv.substr(csv.find('\n') + 1);
    // relic,policy,seed,tool,status,completion,duration_s,hits,...
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) {
        cols.push_back(c);
    }
    REQUIRE(cols.size() == 12);
    CHECK(cols[4] == "completed");
    CHECK(cols[7] == "0");

    // replay the recorded run
    const fs::path events = a.path / "replayed.jsonl";
    const Result rr = cli({"replay", (da / "replay.jsonl").string(), fixture("sphere.json"), "--events", events.string()});
    CHECK(rr.code == 0);
    CHECK(read(events) == read(da / "events.jsonl"));
    CHECK(cli({"replay", (da / "replay.jsonl").string(), catalog("gold_mask.json")}).code == diglab::cli::kExitInvalid);
    CHECK(cli({"replay", (a.path / "nope.jsonl").string(), fixture("sphere.json")}).code == diglab::cli::kExitIo);
}

TEST_CASE("simulate batches and json output") {
    TempDir d;
    const Result r = cli({"simulate", fixture("sphere.json"), "--policy", "random", "--seed", "3", "--runs", "3",
                          "--max-strokes", "40", "--workers", "2", "--json", "--out", d.path.string()});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("runs").size() == 3);
    CHECK(doc.at("run_dirs").size() == 3);
    CHECK(doc.at("runs")[2].at("seed") == 5);
    CHECK(cli({"simulate", fixture("sphere.json"), "--tool", "pickaxe", "--out", d.path.string()}).code ==
          diglab::cli::kExitInvalid);
}

TEST_CASE("mesh export") {
    TempDir d;
    const fs::path obj = d.path / "sphere.obj";
    const Result r = cli({"mesh", fixture("sphere.json"), obj.string(), "--json"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).at("watertight") == true);

    // edge-sharing check on the file itself
    std::ifstream in(obj);
    std::vector<std::array<double, 3>> verts;
    std::map<std::array<double, 3>, std::size_t> ids;
    std::vector<std::size_t> remap;
    std::map<std::pair<std::size_t, std::size_t>, int> edge_use;
    std::string line;
    std::size_t faces = 0;
    while (std::getline(in, line)) {
        std::istringstream rec(line);
        std::string tag;
        rec >> tag;
        if (tag == "v") {
            std::array<double, 3> p{};
            rec >> p[0] >> p[1] >> p[2];
            remap.push_back(ids.emplace(p, ids.size()).first->second);
        } else if (tag == "f") {
            std::size_t v[3];
            for (auto& x : v) {
                std::string tok;
                rec >> tok;
                x = remap.at(std::stoul(tok.substr(0, tok.find('/'))) - 1);
            }
            for (int e = 0; e < 3; ++e) {
                const std::size_t a = v[e];
                const std::size_t b = v[(e + 1) % 3];
                ++edge_use[{std::min(a, b), std::max(a, b)}];
            }
            ++faces;
        }
    }
    CHECK(faces > 1000);
    std::size_t bad = 0;
    for (const auto& [e, n] : edge_use) {
        bad += n == 2 ? 0 : 1;
    }
    CHECK(bad == 0);
    CHECK(static_cast<long long>(ids.size()) - static_cast<long long>(edge_use.size()) + static_cast<long long>(faces) == 2);

    CHECK(cli({"mesh", fixture("empty_sdf.json"), (d.path / "e.obj").string()}).code == diglab::cli::kExitInvalid);
    CHECK(cli({"mesh", fixture("sphere.json"), "/nonexistent-dir/x/out.obj"}).code == diglab::cli::kExitIo);
}

TEST_CASE("export-catalog reproduces the bundled files") {
    TempDir d;
    REQUIRE(cli({"export-catalog", d.path.string()}).code == 0);
    for (const char* f : {"arhat.json", "gold_mask.json"}) {
        CHECK(read(d.path / f) == read(catalog(f)));
    }
}

TEST_CASE("serve: smoke, port clash and SIGTERM") {
    Child server({"serve", "--port", "0"});
    const std::string listening = server.line();
    REQUIRE(listening.rfind("listening on", 0) == 0);
    const std::uint16_t port = port_of(listening);
    {
        wsclient::Client c(port);
        c.send(diglab::protocol::CreateSession{"gold_mask", std::nullopt});
        const auto created = c.recv_until<diglab::protocol::SessionCreated>();
        REQUIRE(created.has_value());
        CHECK(created->tools.size() == 2);
    }
    CHECK(cli({"serve", "--port", std::to_string(port)}).code == diglab::cli::kExitIo);

    REQUIRE(kill(server.pid, SIGTERM) == 0);
    CHECK(server.line() == "stopped\n");
    CHECK(server.wait() == 0);
}

TEST_CASE("serve reads the catalog directory from the environment") {
    TempDir d;
    REQUIRE(cli({"export-catalog", d.path.string()}).code == 0);
    fs::remove(d.path / "arhat.json");
    setenv("DIG_CATALOG_DIR", d.path.c_str(), 1);
    Child server({"serve", "--port", "0"});
    unsetenv("DIG_CATALOG_DIR");
    const std::string listening = server.line();
    REQUIRE(listening.rfind("listening on", 0) == 0);
    {
        wsclient::Client c(port_of(listening));
        c.send(diglab::protocol::CreateSession{"arhat", std::nullopt});
        const auto e = c.recv_until<diglab::protocol::ErrorMessage>();
        REQUIRE(e.has_value());
        CHECK(e->code == "UNKNOWN_RELIC");
    }
    kill(server.pid, SIGINT);
    CHECK(server.wait() == 0);
}
