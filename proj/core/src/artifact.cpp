#include "diglab/artifact.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "diglab/error.hpp"
#include "json_io.hpp"

namespace diglab {
namespace {

int cells_per_axis(double clod_edge, double cell_size) {
    const double ratio = clod_edge / cell_size;
    const double nearest = std::round(ratio);
    const double cells = std::fabs(ratio - nearest) <= 1e-9 * ratio ? nearest : std::ceil(ratio);
    if (cells > kMaxGridCellsPerAxis) {
        throw ValidationError("grid dimension overflow: clod_edge / cell_size exceeds " +
                              std::to_string(kMaxGridCellsPerAxis) + " cells per axis");
    }
    return static_cast<int>(cells);
}

void validate_dialog(const DialogPayload& d, const std::string& what) {
    if (d.body.empty()) {
        throw ValidationError(what + ": dialog body must not be empty");
    }
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void SessionParams::validate() const {
    if (!(time_limit > 0.0) || !std::isfinite(time_limit)) {
        throw ValidationError("session.time_limit_s must be positive");
    }
    if (max_health < 1) {
        throw ValidationError("session.max_health must be at least 1");
    }
    if (hit_penalty < 1) {
        throw ValidationError("session.hit_penalty must be at least 1");
    }
    if (!(completion_exposure > 0.0) || completion_exposure > 1.0) {
        throw ValidationError("session.completion_exposure must be in (0, 1]");
    }
    if (!(hit_cooldown >= 0.0) || !std::isfinite(hit_cooldown)) {
        throw ValidationError("session.hit_cooldown_s must be non-negative");
    }
}

const Tool* ArtifactSpec::find_tool(std::string_view tool_name) const {
    for (const Tool& t : tools) {
        if (t.name == tool_name) {
            return &t;
        }
    }
    return nullptr;
}

bool operator==(const ArtifactSpec& a, const ArtifactSpec& b) {
    const bool same_geometry = (a.geometry && b.geometry) ? *a.geometry == *b.geometry : a.geometry == b.geometry;
    return a.name == b.name && same_geometry && a.triggers == b.triggers && a.completion_dialog == b.completion_dialog &&
           a.clod_edge == b.clod_edge && a.cell_size == b.cell_size && a.tools == b.tools && a.session == b.session &&
           a.trigger_count == b.trigger_count && a.reveal_margin == b.reveal_margin;
}

Tool hammer_tool() { return Tool{"hammer", Brush{SphereBrush{0.05}, 1.0, Falloff::Hard}}; }

Tool shovel_tool() { return Tool{"shovel", Brush{BoxBrush{{0.10, 0.06, 0.015}}, 1.0, Falloff::Hard}}; }

void validate_spec(const ArtifactSpec& spec) {
    if (spec.name.empty()) {
        throw ValidationError("name must not be empty");
    }
    if (!spec.geometry) {
        throw ValidationError("geometry is missing");
    }
    validate_sdf(*spec.geometry);
    if (!(spec.clod_edge > 0.0) || !(spec.cell_size > 0.0) || !std::isfinite(spec.clod_edge) ||
        !std::isfinite(spec.cell_size)) {
        throw ValidationError("clod_edge and cell_size must be positive");
    }
    const int n = cells_per_axis(spec.clod_edge, spec.cell_size);
    if (!(spec.reveal_margin > 0.0)) {
        throw ValidationError("reveal_margin must be positive");
    }
    spec.session.validate();

    const double half = spec.clod_edge * 0.5;
    const GridShape shape{{n, n, n}, spec.cell_size, {-half, -half, -half}, kDefaultChunkSize};
    const SdfNode& sdf = *spec.geometry;

    // Same rule as init_grid: no artifact cell on the grid boundary.
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            for (const int edge : {0, n - 1}) {
                for (const Int3 c : {Int3{edge, a, b}, Int3{a, edge, b}, Int3{a, b, edge}}) {
                    if (eval_sdf(sdf, shape.center(c)) <= 0.0) {
                        throw DegenerateArtifactError("geometry is not strictly inside the clod (touches the boundary)");
                    }
                }
            }
        }
    }
    // At least one artifact cell.
    {
        const Aabb bounds = sdf_bounds(sdf);
        const Int3 lo = shape.cell_at(bounds.min);
        const Int3 hi = shape.cell_at(bounds.max);
        bool occupied = false;
        for (int k = std::max(lo.z, 0); k <= std::min(hi.z, n - 1) && !occupied; ++k) {
            for (int j = std::max(lo.y, 0); j <= std::min(hi.y, n - 1) && !occupied; ++j) {
                for (int i = std::max(lo.x, 0); i <= std::min(hi.x, n - 1) && !occupied; ++i) {
                    occupied = eval_sdf(sdf, shape.center(i, j, k)) <= 0.0;
                }
            }
        }
        if (!occupied) {
            throw DegenerateArtifactError("geometry occupies no grid cell (degenerate artifact)");
        }
    }

    if (spec.trigger_count < 1) {
        throw ValidationError("trigger_count must be at least 1");
    }
    if (static_cast<int>(spec.triggers.size()) != spec.trigger_count) {
        throw ValidationError("expected " + std::to_string(spec.trigger_count) + " triggers (" +
                              (spec.trigger_count == kDefaultTriggerCount
                                   ? std::string("three dialog boxes per relic; set trigger_count to override")
                                   : std::string("per trigger_count")) +
                              "), found " + std::to_string(spec.triggers.size()));
    }
    std::set<std::string> ids;
    for (const TriggerPoint& t : spec.triggers) {
        const std::string who = "trigger '" + t.id + "'";
        if (t.id.empty()) {
            throw ValidationError("trigger id must not be empty");
        }
        if (!ids.insert(t.id).second) {
            throw ValidationError(who + ": duplicate trigger id");
        }
        validate_dialog(t.dialog, who);
        const Vec3& p = t.position;
        if (!(std::fabs(p.x) < half && std::fabs(p.y) < half && std::fabs(p.z) < half)) {
            throw ValidationError(who + ": position is outside the clod");
        }
        const double d = eval_sdf(sdf, p);
        if (d <= 0.0) {
            throw ValidationError(who + ": trigger inside artifact");
        }
        if (d > spec.reveal_margin) {
            throw ValidationError(who + ": trigger is farther than reveal_margin (" + std::to_string(spec.reveal_margin) +
                                  " m) from the artifact surface");
        }
        const Int3 cell = shape.cell_at(p);
        if (eval_sdf(sdf, shape.center(cell)) <= 0.0) {
            throw ValidationError(who + ": trigger cell is an artifact cell and can never be dug out");
        }
    }
    validate_dialog(spec.completion_dialog, "completion_dialog");

    if (spec.tools.empty()) {
        throw ValidationError("at least one tool is required");
    }
    std::set<std::string> tool_names;
    for (const Tool& tool : spec.tools) {
        if (tool.name.empty()) {
            throw ValidationError("tool name must not be empty");
        }
        if (!tool_names.insert(tool.name).second) {
            throw ValidationError("tool '" + tool.name + "': duplicate tool name");
        }
        try {
            tool.brush.validate();
        } catch (const ValidationError& e) {
            throw ValidationError("tool '" + tool.name + "': " + e.what());
        }
    }
}

ArtifactSpec load_spec(std::string_view document) {
    ArtifactSpec spec = json_io::spec(json_io::parse(document));
    validate_spec(spec);
    return spec;
}

ArtifactSpec load_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return load_spec(text.str());
}

std::string serialize_spec(const ArtifactSpec& spec) { return json_io::spec(spec).dump(2) + "\n"; }

std::string spec_hash(const ArtifactSpec& spec) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(json_io::spec(spec).dump())));
    return buf;
}

std::vector<ArtifactSpec> builtin_relics() {
    std::vector<ArtifactSpec> relics;

    // Seated monk on a rock pedestal, about 1.67 m tall.
    ArtifactSpec arhat;
    arhat.name = "arhat";
    arhat.geometry = make_union({
        make_box({0.0, -0.70, 0.0}, {0.45, 0.15, 0.35}),               // pedestal
        make_capsule({-0.30, -0.43, 0.08}, {0.30, -0.43, 0.08}, 0.13),  // crossed legs
        make_capsule({0.0, -0.40, 0.0}, {0.0, 0.22, 0.0}, 0.23),        // torso
        make_capsule({-0.22, 0.20, 0.0}, {0.22, 0.20, 0.0}, 0.12),      // shoulders
        make_capsule({-0.27, 0.18, 0.02}, {-0.10, -0.22, 0.22}, 0.075), // left arm
        make_capsule({0.27, 0.18, 0.02}, {0.10, -0.22, 0.22}, 0.075),   // right arm
        make_capsule({0.0, 0.28, 0.0}, {0.0, 0.45, 0.0}, 0.085),        // neck
        make_sphere({0.0, 0.56, 0.02}, 0.17),                            // head
        make_sphere({-0.165, 0.55, 0.0}, 0.05),
        make_sphere({0.165, 0.55, 0.0}, 0.05),
        make_sphere({0.0, 0.74, 0.0}, 0.08),                             // topknot
    });
    arhat.triggers = {
        {"face", {0.005, 0.565, 0.225},
         {"A calm face", "The arhat's face is shown in quiet meditation, with heavy-lidded eyes and a gentle mouth. "
                         "Sculptors gave each arhat an individual, portrait-like expression.",
          "audio/arhat_face.ogg"}},
        {"hands", {0.005, -0.215, 0.265},
         {"Hands at rest", "The hands rest in the lap in a meditative gesture, a sign of the disciple's "
                           "self-discipline and inner focus.",
          "audio/arhat_hands.ogg"}},
        {"pedestal", {0.005, -0.775, 0.385},
         {"Rocky seat", "The figure sits on a rock-like base, recalling the mountain retreats where arhats were "
                        "believed to live and meditate.",
          "audio/arhat_pedestal.ogg"}},
    };
    arhat.completion_dialog = {"Arhat (Luohan)",
                               "A life-size glazed ceramic figure of an arhat, an enlightened disciple of the Buddha. "
                               "Sets of such figures were made for temple halls, each with its own character.",
                               "audio/arhat_complete.ogg"};
    arhat.tools = {hammer_tool(), shovel_tool()};
    relics.push_back(std::move(arhat));

    // Elongated bronze head wearing a gold foil mask, about 1.63 m tall.
    ArtifactSpec mask;
    mask.name = "gold_mask";
    mask.geometry = make_union({
        make_capsule({0.0, -0.64, 0.0}, {0.0, -0.22, 0.0}, 0.21),        // neck
        make_box({0.0, 0.20, 0.0}, {0.28, 0.40, 0.26}),                   // head
        make_box({0.0, 0.68, 0.0}, {0.26, 0.10, 0.24}),                   // flat crown
        make_box({0.0, 0.20, 0.27}, {0.27, 0.32, 0.025}),                 // gold mask plate
        make_box({0.0, 0.18, 0.32}, {0.04, 0.12, 0.04}),                  // nose
        make_box({-0.31, 0.25, 0.0}, {0.05, 0.14, 0.06}),                 // left ear
        make_box({0.31, 0.25, 0.0}, {0.05, 0.14, 0.06}),                  // right ear
        make_capsule({0.0, 0.50, -0.27}, {0.0, -0.10, -0.30}, 0.05),      // braid
    });
    mask.triggers = {
        {"mask", {0.005, 0.355, 0.325},
         {"Gold foil mask", "A thin sheet of hammered gold covers the face, leaving the eyebrows and eyes open. "
                            "The gold was pressed onto the bronze over a layer of adhesive.",
          "audio/mask_face.ogg"}},
        {"ear", {0.395, 0.255, 0.005},
         {"Pierced ears", "The large ears have pierced lobes, a detail shared by many bronze heads from the same "
                          "pit.",
          "audio/mask_ear.ogg"}},
        {"crown", {0.005, 0.815, 0.055},
         {"Flat top", "The top of the head is flat; it may once have carried a separate headdress or crown.",
          "audio/mask_crown.ogg"}},
    };
    mask.completion_dialog = {"Bronze head with gold mask",
                              "A cast bronze head with a gold foil mask from the Sanxingdui site in Sichuan, China, "
                              "made more than three thousand years ago.",
                              "audio/mask_complete.ogg"};
    mask.tools = {hammer_tool(), shovel_tool()};
    relics.push_back(std::move(mask));

    return relics;
}

}  // namespace diglab
