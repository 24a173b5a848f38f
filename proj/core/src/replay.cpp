#include "diglab/replay.hpp"

#include "diglab/error.hpp"
#include "json_io.hpp"

namespace diglab {

std::string export_replay(const Session& session) {
    using json_io::Json;
    std::string out;
    const Json header{{"format_version", kReplayFormatVersion},
                      {"spec_hash", spec_hash(session.spec())},
                      {"seed", session.seed()},
                      {"params", json_io::params(session.params())}};
    out += header.dump();
    out += '\n';
    for (const SessionInput& in : session.inputs()) {
        Json line{{"t", in.t}};
        switch (in.kind) {
            case SessionInput::Kind::Stroke:
                line["kind"] = "stroke";
                line["payload"] = json_io::pose(in.pose);
                break;
            case SessionInput::Kind::Tick:
                line["kind"] = "tick";
                line["payload"] = Json::object();
                break;
            case SessionInput::Kind::SelectTool:
                line["kind"] = "select_tool";
                line["payload"] = Json{{"tool", in.tool}};
                break;
        }
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::unique_ptr<Session> replay_session(std::string_view document, const ArtifactSpec& spec) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string_view> {
        while (pos < document.size()) {
            const std::size_t end = std::min(document.find('\n', pos), document.size());
            const std::string_view line = document.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (!line.empty()) {
                return line;
            }
        }
        return std::nullopt;
    };
    auto where = [&] { return "line " + std::to_string(line_no); };

    const auto header_line = next_line();
    if (!header_line) {
        throw ParseError("line 1", "empty replay document");
    }
    const json_io::Json header = json_io::parse(*header_line);
    json_io::require_object(header, where(), {"format_version", "spec_hash", "seed", "params"});
    if (json_io::integer_at(header, where(), "format_version") != kReplayFormatVersion) {
        throw ParseError(where(), "unsupported replay format_version");
    }
    const std::string hash = json_io::string_at(header, where(), "spec_hash");
    const std::string expected = spec_hash(spec);
    if (hash != expected) {
        throw ReplayMismatchError("replay was recorded for spec " + hash + ", got spec " + expected);
    }
    const json_io::Json& seed = json_io::field(header, where(), "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw ParseError(where() + "/seed", "expected an integer");
    }
    const SessionParams params = json_io::params(json_io::field(header, where(), "params"), where() + "/params");

    auto session = std::make_unique<Session>(std::make_shared<const ArtifactSpec>(spec), seed.get<std::uint64_t>(),
                                             params);
    while (const auto line = next_line()) {
        const json_io::Json in = json_io::parse(*line);
        json_io::require_object(in, where(), {"t", "kind", "payload"});
        const double t = json_io::number_at(in, where(), "t");
        const std::string kind = json_io::string_at(in, where(), "kind");
        const json_io::Json& payload = json_io::field(in, where(), "payload");
        if (kind == "stroke") {
            session->apply_stroke({t, json_io::pose(payload, where() + "/payload")});
        } else if (kind == "tick") {
            session->tick(t);
        } else if (kind == "select_tool") {
            json_io::require_object(payload, where() + "/payload", {"tool"});
            session->select_tool(json_io::string_at(payload, where() + "/payload", "tool"));
        } else {
            throw ParseError(where() + "/kind", "unknown input kind '" + kind + "'");
        }
    }
    return session;
}

SessionReport replay(std::string_view document, const ArtifactSpec& spec) {
    return replay_session(document, spec)->final_report();
}

}  // namespace diglab
