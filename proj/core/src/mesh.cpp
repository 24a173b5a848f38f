#include "diglab/mesh.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>

namespace diglab {

WeldedMesh weld_by_position(std::span<const MeshChunk> chunks) {
    WeldedMesh mesh;
    std::map<std::tuple<float, float, float>, std::uint32_t> ids;
    for (const MeshChunk& chunk : chunks) {
        std::vector<std::uint32_t> remap(chunk.vertex_count());
        for (std::size_t v = 0; v < chunk.vertex_count(); ++v) {
            const auto key = std::make_tuple(chunk.positions[3 * v], chunk.positions[3 * v + 1],
                                             chunk.positions[3 * v + 2]);
            auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (inserted) {
                mesh.vertices.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
            }
            remap[v] = it->second;
        }
        for (std::size_t t = 0; t < chunk.triangle_count(); ++t) {
            mesh.triangles.push_back({remap[chunk.indices[3 * t]], remap[chunk.indices[3 * t + 1]],
                                      remap[chunk.indices[3 * t + 2]]});
        }
    }
    return mesh;
}

MeshTopology analyze_topology(const WeldedMesh& mesh) {
    MeshTopology topo;
    topo.vertices = mesh.vertices.size();
    topo.faces = mesh.triangles.size();
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (const auto& tri : mesh.triangles) {
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            ++topo.degenerate_faces;
        }
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = tri[e];
            const std::uint32_t b = tri[(e + 1) % 3];
            ++edge_use[{std::min(a, b), std::max(a, b)}];
        }
    }
    topo.edges = edge_use.size();
    for (const auto& [edge, uses] : edge_use) {
        if (uses == 1) {
            ++topo.boundary_edges;
        } else if (uses > 2) {
            ++topo.nonmanifold_edges;
        }
    }
    return topo;
}

void write_obj(std::ostream& out, std::span<const MeshChunk> chunks, const char* object_name) {
    if (object_name != nullptr) {
        out << "o " << object_name << '\n';
    }
    const auto old_precision = out.precision(9);
    std::size_t base = 1;
    for (const MeshChunk& chunk : chunks) {
        for (std::size_t v = 0; v < chunk.vertex_count(); ++v) {
            out << "v " << chunk.positions[3 * v] << ' ' << chunk.positions[3 * v + 1] << ' '
                << chunk.positions[3 * v + 2] << '\n';
        }
        for (std::size_t v = 0; v < chunk.vertex_count(); ++v) {
            out << "vn " << chunk.normals[3 * v] << ' ' << chunk.normals[3 * v + 1] << ' '
                << chunk.normals[3 * v + 2] << '\n';
        }
        for (std::size_t t = 0; t < chunk.triangle_count(); ++t) {
            const std::size_t a = base + chunk.indices[3 * t];
            const std::size_t b = base + chunk.indices[3 * t + 1];
            const std::size_t c = base + chunk.indices[3 * t + 2];
            out << "f " << a << "//" << a << ' ' << b << "//" << b << ' ' << c << "//" << c << '\n';
        }
        base += chunk.vertex_count();
    }
    out.precision(old_precision);
}

}  // namespace diglab
