#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <pthread.h>
#include <sstream>

#include "CLI11.hpp"
#include "diglab/artifact.hpp"
#include "diglab/error.hpp"
#include "diglab/mesh.hpp"
#include "diglab/replay.hpp"
#include "diglab/service.hpp"
#include "diglab/sim.hpp"
#include "diglab/surface_mesher.hpp"
#include "json.hpp"

namespace diglab::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    file << content;
    if (!file.flush()) {
        throw IoError("error writing '" + path.string() + "'");
    }
}

std::string obj_text(std::span<const MeshChunk> chunks, const char* name) {
    std::ostringstream text;
    write_obj(text, chunks, name);
    return text.str();
}

GridShape grid_shape_for(const ArtifactSpec& spec) {
    const int n = static_cast<int>(std::lround(spec.clod_edge / spec.cell_size));
    const double half = spec.clod_edge / 2.0;
    return GridShape{{n, n, n}, spec.cell_size, {-half, -half, -half}, kDefaultChunkSize};
}

// Maps engine errors to exit codes; anything else propagates.
template <class Fn>
int guarded(Streams io, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        io.err << "invalid: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ParseError& e) {
        io.err << "invalid: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const IoError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

struct ValidateArgs {
    std::string package;
    bool json = false;
};

int cmd_validate(const ValidateArgs& a, Streams io) {
    try {
        const ArtifactSpec spec = load_spec_file(a.package);
        if (a.json) {
            io.out << Json{{"valid", true},
                           {"name", spec.name},
                           {"spec_hash", spec_hash(spec)},
                           {"triggers", spec.triggers.size()},
                           {"tools", spec.tools.size()}}
                          .dump()
                   << '\n';
        } else {
            io.out << "valid: " << spec.name << " (" << spec.triggers.size() << " triggers, " << spec.tools.size()
                   << " tools, spec " << spec_hash(spec) << ")\n";
        }
        return kExitOk;
    } catch (const IoError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        if (a.json) {
            io.out << Json{{"valid", false}, {"reason", e.what()}}.dump() << '\n';
        }
        io.err << "invalid: " << e.what() << '\n';
        return kExitInvalid;
    }
}

struct SimulateArgs {
    std::string package;
    std::string policy = "random";
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::string out = "runs";
    std::string tool;
    std::size_t max_strokes = 0;
    double time_limit = 0.0;
    double strokes_per_s = kDefaultStrokeRate;
    double stand_off = 0.0;
    double sdf_margin = 0.08;
    unsigned workers = 1;
    bool json = false;
};

int cmd_simulate(const SimulateArgs& a, Streams io) {
    return guarded(io, [&] {
        const ArtifactSpec spec = load_spec_file(a.package);
        RunOptions options;
        if (!a.tool.empty()) {
            if (spec.find_tool(a.tool) == nullptr) {
                throw ValidationError("unknown tool '" + a.tool + "'");
            }
            options.tool = a.tool;
        }
        if (a.max_strokes > 0) {
            options.max_strokes = a.max_strokes;
        }
        if (a.time_limit > 0.0) {
            SessionParams params = spec.session;
            params.time_limit = a.time_limit;
            options.params = params;
        }
        const std::string tool_name = options.tool.value_or(spec.tools.front().name);
        const std::string hash = spec_hash(spec);

        std::vector<BotPolicy> policies;
        for (std::size_t n = 0; n < a.runs; ++n) {
            BotPolicy p = *policy_from_name(a.policy, a.seed + n);
            if (auto* r = std::get_if<RandomCarver>(&p.variant)) {
                r->strokes_per_s = a.strokes_per_s;
            } else if (auto* s = std::get_if<SurfaceFollower>(&p.variant)) {
                s->stand_off = a.stand_off;
            } else {
                std::get<RiskAverse>(p.variant).sdf_margin = a.sdf_margin;
            }
            p.validate();
            policies.push_back(p);
        }

        std::vector<MetricsRow> rows(policies.size());
        std::vector<std::string> dirs(policies.size());
        parallel_for(policies.size(), a.workers, [&](std::size_t n) {
            auto [session, run] = run_bot_session(spec, policies[n], options);
            MetricsRow row{spec.name, a.policy, policies[n].seed, tool_name, std::move(run)};
            const fs::path dir =
                fs::path(a.out) / (spec.name + "-seed" + std::to_string(policies[n].seed) + "-" + hash.substr(0, 8));
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) {
                throw IoError("cannot create '" + dir.string() + "': " + ec.message());
            }
            session->remesh_dirty();
            write_file(dir / "replay.jsonl", export_replay(*session));
            write_file(dir / "events.jsonl", serialize_event_log(session->events()));
            write_file(dir / "metrics.csv", metrics_csv({row}));
            write_file(dir / "summary.json", summary_json(hash, {row}));
            write_file(dir / "earth.obj", obj_text(session->earth_mesh(), "earth"));
            write_file(dir / "artifact.obj", obj_text(session->artifact_mesh(), "artifact"));
            rows[n] = std::move(row);
            dirs[n] = dir.string();
        });

        if (a.json) {
            Json doc = Json::parse(summary_json(hash, rows));
            doc["run_dirs"] = dirs;
            io.out << doc.dump(2) << '\n';
        } else {
            io.out << metrics_csv_header() << '\n';
            for (const MetricsRow& row : rows) {
                io.out << metrics_csv_row(row) << '\n';
            }
            for (const std::string& d : dirs) {
                io.out << "wrote " << d << '\n';
            }
        }
        return kExitOk;
    });
}

struct MeshArgs {
    std::string package;
    std::string output;
    bool json = false;
};

int cmd_mesh(const MeshArgs& a, Streams io) {
    return guarded(io, [&] {
        const ArtifactSpec spec = load_spec_file(a.package);
        const std::vector<MeshChunk> chunks = mesh_artifact(*spec.geometry, grid_shape_for(spec));
        const MeshTopology topo = analyze_topology(weld_by_position(chunks));
        write_file(a.output, obj_text(chunks, spec.name.c_str()));
        if (a.json) {
            io.out << Json{{"output", a.output},
                           {"vertices", topo.vertices},
                           {"triangles", topo.faces},
                           {"watertight", topo.watertight()},
                           {"euler_characteristic", topo.euler_characteristic()}}
                          .dump()
                   << '\n';
        } else {
            io.out << "wrote " << a.output << ": " << topo.vertices << " vertices, " << topo.faces << " triangles, "
                   << (topo.watertight() ? "watertight" : "not watertight") << '\n';
        }
        return kExitOk;
    });
}

struct ReplayArgs {
    std::string replay;
    std::string package;
    std::string events;
    bool json = false;
};

int cmd_replay(const ReplayArgs& a, Streams io) {
    return guarded(io, [&] {
        const ArtifactSpec spec = load_spec_file(a.package);
        std::ifstream in(a.replay, std::ios::binary);
        if (!in) {
            throw IoError("cannot open '" + a.replay + "'");
        }
        std::ostringstream text;
        text << in.rdbuf();
        std::unique_ptr<Session> session;
        try {
            session = replay_session(text.str(), spec);
        } catch (const ReplayMismatchError& e) {
            throw ValidationError(e.what());
        }
        if (!a.events.empty()) {
            write_file(a.events, serialize_event_log(session->events()));
        }
        const SessionReport report = session->current_report();
        if (a.json) {
            io.out << serialize_report(report) << '\n';
        } else {
            io.out << "status " << to_string(report.status) << ", " << report.strokes << " strokes, "
                   << report.hits_taken << " hits, exposure " << report.exposure << '\n';
        }
        return kExitOk;
    });
}

struct ServeArgs {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765;
    std::string catalog;
    unsigned io_threads = 1;
    unsigned mesh_workers = 1;
};

int cmd_serve(const ServeArgs& a, Streams io) {
    return guarded(io, [&] {
        std::string dir = a.catalog;
        if (dir.empty()) {
            if (const char* env = std::getenv("DIG_CATALOG_DIR")) {
                dir = env;
            }
        }
        Catalog catalog = dir.empty() ? builtin_catalog() : load_catalog(dir);

        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        sigset_t previous;
        pthread_sigmask(SIG_BLOCK, &signals, &previous);

        ServiceOptions options;
        options.address = a.address;
        options.port = a.port;
        options.io_threads = a.io_threads;
        options.mesh_workers = a.mesh_workers;
        DigService service(std::move(catalog), options);
        try {
            service.start();
        } catch (const Error& e) {
            pthread_sigmask(SIG_SETMASK, &previous, nullptr);
            throw IoError(e.what());
        }
        io.out << "listening on " << a.address << ":" << service.port() << '\n' << std::flush;
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
        pthread_sigmask(SIG_SETMASK, &previous, nullptr);
        io.out << "stopped\n";
        return kExitOk;
    });
}

struct ExportArgs {
    std::string dir;
};

int cmd_export_catalog(const ExportArgs& a, Streams io) {
    return guarded(io, [&] {
        std::error_code ec;
        fs::create_directories(a.dir, ec);
        if (ec) {
            throw IoError("cannot create '" + a.dir + "': " + ec.message());
        }
        for (const ArtifactSpec& spec : builtin_relics()) {
            const fs::path path = fs::path(a.dir) / (spec.name + ".json");
            write_file(path, serialize_spec(spec));
            io.out << "wrote " << path.string() << '\n';
        }
        return kExitOk;
    });
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Streams io{out, err};
    CLI::App app{"Voxel excavation engine: validate relic packages, simulate digs, export meshes, serve sessions."};
    app.name("diglab");
    app.require_subcommand(1);

    ValidateArgs validate;
    auto* validate_cmd = app.add_subcommand("validate", "Check a relic package");
    validate_cmd->add_option("package", validate.package, "Package file (.json)")->required();
    validate_cmd->add_flag("--json", validate.json, "Machine-readable output");

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run seeded bot sessions and write run directories");
    simulate_cmd->add_option("package", simulate.package, "Package file (.json)")->required();
    simulate_cmd->add_option("--policy", simulate.policy, "Bot policy")
        ->check(CLI::IsMember({"random", "surface-follower", "risk-averse"}))
        ->capture_default_str();
    simulate_cmd->add_option("--seed", simulate.seed, "First seed")->capture_default_str();
    simulate_cmd->add_option("--runs", simulate.runs, "Number of runs, seeds seed..seed+runs-1")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate_cmd->add_option("--out", simulate.out, "Output directory")->capture_default_str();
    simulate_cmd->add_option("--tool", simulate.tool, "Tool to dig with (default: the package's first tool)");
    simulate_cmd->add_option("--max-strokes", simulate.max_strokes, "Stroke budget per run (0: unlimited)");
    simulate_cmd->add_option("--time-limit", simulate.time_limit, "Override the session time limit, seconds")
        ->check(CLI::NonNegativeNumber);
    simulate_cmd->add_option("--strokes-per-s", simulate.strokes_per_s, "Random carver stroke rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate_cmd->add_option("--stand-off", simulate.stand_off, "Surface follower stand-off, meters")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    simulate_cmd->add_option("--sdf-margin", simulate.sdf_margin, "Risk-averse SDF margin, meters")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    simulate_cmd->add_option("--workers", simulate.workers, "Parallel runs")->check(CLI::PositiveNumber);
    simulate_cmd->add_flag("--json", simulate.json, "Print the summary document instead of CSV");

    MeshArgs mesh;
    auto* mesh_cmd = app.add_subcommand("mesh", "Export the relic surface as OBJ");
    mesh_cmd->add_option("package", mesh.package, "Package file (.json)")->required();
    mesh_cmd->add_option("output", mesh.output, "Output .obj path")->required();
    mesh_cmd->add_flag("--json", mesh.json, "Machine-readable output");

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a replay log against its package");
    replay_cmd->add_option("replay", replay.replay, "replay.jsonl")->required();
    replay_cmd->add_option("package", replay.package, "Package file (.json)")->required();
    replay_cmd->add_option("--events", replay.events, "Write the reproduced event log here");
    replay_cmd->add_flag("--json", replay.json, "Print the report as JSON");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket dig service until SIGINT/SIGTERM");
    serve_cmd->add_option("--address", serve.address, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "Bind port")->capture_default_str();
    serve_cmd->add_option("--catalog", serve.catalog, "Package directory (default: $DIG_CATALOG_DIR, else built-in)");
    serve_cmd->add_option("--io-threads", serve.io_threads, "Network threads")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--mesh-workers", serve.mesh_workers, "Chunk meshing threads per session")
        ->check(CLI::PositiveNumber);

    ExportArgs export_args;
    auto* export_cmd = app.add_subcommand("export-catalog", "Write the built-in relic packages");
    export_cmd->add_option("dir", export_args.dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    if (*validate_cmd) {
        return cmd_validate(validate, io);
    }
    if (*simulate_cmd) {
        return cmd_simulate(simulate, io);
    }
    if (*mesh_cmd) {
        return cmd_mesh(mesh, io);
    }
    if (*replay_cmd) {
        return cmd_replay(replay, io);
    }
    if (*serve_cmd) {
        return cmd_serve(serve, io);
    }
    return cmd_export_catalog(export_args, io);
}

}  // namespace diglab::cli
