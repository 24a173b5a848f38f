#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "diglab/geometry.hpp"

namespace diglab {

/// Triangle mesh for one chunk. Positions and normals are packed xyz floats in
/// world space; triangles wind counter-clockwise seen from outside the solid.
struct MeshChunk {
    Int3 coord;
    std::uint64_t version = 0;
    std::vector<float> positions;
    std::vector<float> normals;
    std::vector<std::uint32_t> indices;

    std::size_t vertex_count() const { return positions.size() / 3; }
    std::size_t triangle_count() const { return indices.size() / 3; }
    bool empty() const { return indices.empty(); }

    /// Same geometry, ignoring version.
    bool same_geometry(const MeshChunk& other) const {
        return coord == other.coord && positions == other.positions && normals == other.normals &&
               indices == other.indices;
    }
    friend bool operator==(const MeshChunk&, const MeshChunk&) = default;
};

/// Chunks concatenated with vertices merged by exact position.
struct WeldedMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
};

WeldedMesh weld_by_position(std::span<const MeshChunk> chunks);

struct MeshTopology {
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t faces = 0;
    std::size_t boundary_edges = 0;      ///< used by one triangle
    std::size_t nonmanifold_edges = 0;   ///< used by more than two triangles
    std::size_t degenerate_faces = 0;    ///< repeated vertex index

    bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0 && edges > 0; }
    long long euler_characteristic() const {
        return static_cast<long long>(vertices) - static_cast<long long>(edges) + static_cast<long long>(faces);
    }
};

MeshTopology analyze_topology(const WeldedMesh& mesh);

/// ASCII OBJ: v / vn / f a//a records with 1-based indices, chunk after chunk.
void write_obj(std::ostream& out, std::span<const MeshChunk> chunks, const char* object_name = nullptr);

}  // namespace diglab
