#include "diglab/surface_mesher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "diglab/error.hpp"
#include "diglab/mc_tables.hpp"

namespace diglab {
namespace {

/// Lattice samples covering one chunk's cubes plus the apron needed for
/// corner values (one sample) and central-difference gradients (two samples).
class SampleBlock {
public:
    template <class Sampler>
    SampleBlock(const GridShape& shape, const Int3& chunk, Sampler&& sample) {
        for (int axis = 0; axis < 3; ++axis) {
            const int q0 = chunk[axis] * shape.chunk_size;
            const int q1 = std::min(q0 + shape.chunk_size, shape.dims[axis] + 1);
            cube_begin_[axis] = q0;
            cube_end_[axis] = q1;
            lo_[axis] = q0 - 2;
            size_[axis] = q1 - q0 + 3;
        }
        values_.resize(static_cast<std::size_t>(size_[0]) * size_[1] * size_[2]);
        std::size_t n = 0;
        for (int k = 0; k < size_[2]; ++k) {
            for (int j = 0; j < size_[1]; ++j) {
                for (int i = 0; i < size_[0]; ++i) {
                    values_[n++] = sample(lo_[0] + i, lo_[1] + j, lo_[2] + k);
                }
            }
        }
    }

    double at(int i, int j, int k) const { return values_[local(i, j, k)]; }
    std::size_t local(int i, int j, int k) const {
        return static_cast<std::size_t>(i - lo_[0]) +
               static_cast<std::size_t>(size_[0]) *
                   (static_cast<std::size_t>(j - lo_[1]) + static_cast<std::size_t>(size_[1]) * (k - lo_[2]));
    }
    std::size_t size() const { return values_.size(); }
    int cube_begin(int axis) const { return cube_begin_[axis]; }
    int cube_end(int axis) const { return cube_end_[axis]; }

    Vec3 gradient(int i, int j, int k) const {
        return {at(i + 1, j, k) - at(i - 1, j, k), at(i, j + 1, k) - at(i, j - 1, k),
                at(i, j, k + 1) - at(i, j, k - 1)};
    }

private:
    int cube_begin_[3]{};
    int cube_end_[3]{};
    int lo_[3]{};
    int size_[3]{};
    std::vector<double> values_;
};

void check_chunk(const GridShape& shape, const Int3& chunk) {
    if (!shape.chunk_in_bounds(chunk)) {
        throw std::out_of_range("chunk (" + std::to_string(chunk.x) + "," + std::to_string(chunk.y) + "," +
                                std::to_string(chunk.z) + ") is outside the grid");
    }
}

MeshChunk march(const GridShape& shape, const Int3& chunk, double iso, const SampleBlock& block) {
    MeshChunk mesh;
    mesh.coord = chunk;
    // Vertex id per lattice edge, keyed by (lower sample, axis).
    std::vector<std::int32_t> edge_vertex(block.size() * 3, -1);

    auto vertex_on_edge = [&](const int (&a)[3], int axis) -> std::uint32_t {
        const std::size_t key = block.local(a[0], a[1], a[2]) * 3 + static_cast<std::size_t>(axis);
        if (edge_vertex[key] >= 0) {
            return static_cast<std::uint32_t>(edge_vertex[key]);
        }
        int b[3] = {a[0], a[1], a[2]};
        ++b[axis];
        const double va = block.at(a[0], a[1], a[2]);
        const double vb = block.at(b[0], b[1], b[2]);
        const double t = va == vb ? 0.5 : (iso - va) / (vb - va);

        Vec3 pos = shape.center(a[0], a[1], a[2]);
        const double offset = t * shape.cell_size;
        (axis == 0 ? pos.x : axis == 1 ? pos.y : pos.z) += offset;

        const Vec3 ga = block.gradient(a[0], a[1], a[2]);
        const Vec3 gb = block.gradient(b[0], b[1], b[2]);
        Vec3 normal = -(ga * (1.0 - t) + gb * t);
        const double len = length(normal);
        if (len > 1e-12) {
            normal = normal / len;
        } else {
            // Flat gradient: point from the solid corner towards the empty one.
            normal = Vec3{};
            const double dir = va >= iso ? 1.0 : -1.0;
            (axis == 0 ? normal.x : axis == 1 ? normal.y : normal.z) = dir;
        }

        const auto id = static_cast<std::uint32_t>(mesh.vertex_count());
        mesh.positions.insert(mesh.positions.end(),
                              {static_cast<float>(pos.x), static_cast<float>(pos.y), static_cast<float>(pos.z)});
        mesh.normals.insert(mesh.normals.end(), {static_cast<float>(normal.x), static_cast<float>(normal.y),
                                                 static_cast<float>(normal.z)});
        edge_vertex[key] = static_cast<std::int32_t>(id);
        return id;
    };

    for (int qz = block.cube_begin(2); qz < block.cube_end(2); ++qz) {
        for (int qy = block.cube_begin(1); qy < block.cube_end(1); ++qy) {
            for (int qx = block.cube_begin(0); qx < block.cube_end(0); ++qx) {
                // Cube q spans samples q-1 .. q on each axis.
                const int base[3] = {qx - 1, qy - 1, qz - 1};
                int cube_case = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto& off = mc::kCornerOffsets[c];
                    if (block.at(base[0] + off[0], base[1] + off[1], base[2] + off[2]) < iso) {
                        cube_case |= 1 << c;
                    }
                }
                const std::uint16_t edges = mc::kEdgeTable[cube_case];
                if (edges == 0) {
                    continue;
                }
                std::uint32_t verts[12] = {};
                for (int e = 0; e < 12; ++e) {
                    if ((edges & (1u << e)) == 0) {
                        continue;
                    }
                    const auto& c0 = mc::kCornerOffsets[mc::kEdgeCorners[e][0]];
                    const auto& c1 = mc::kCornerOffsets[mc::kEdgeCorners[e][1]];
                    int lower[3];
                    int axis = 0;
                    for (int d = 0; d < 3; ++d) {
                        lower[d] = base[d] + std::min(c0[d], c1[d]);
                        if (c0[d] != c1[d]) {
                            axis = d;
                        }
                    }
                    verts[e] = vertex_on_edge(lower, axis);
                }
                const auto& tris = mc::kTriTable[cube_case];
                for (int n = 0; n < 16 && tris[n] >= 0; n += 3) {
                    mesh.indices.insert(mesh.indices.end(), {verts[tris[n]], verts[tris[n + 1]], verts[tris[n + 2]]});
                }
            }
        }
    }
    return mesh;
}

MeshChunk extract_unchecked(const VoxelGrid& grid, const Int3& chunk, double isovalue) {
    const SampleBlock block(grid.shape(), chunk, [&](int i, int j, int k) { return grid.sample(i, j, k); });
    return march(grid.shape(), chunk, isovalue, block);
}

std::vector<Int3> all_chunks(const GridShape& shape) {
    std::vector<Int3> out;
    const Int3 d = shape.chunk_dims();
    for (int x = 0; x < d.x; ++x) {
        for (int y = 0; y < d.y; ++y) {
            for (int z = 0; z < d.z; ++z) {
                out.push_back({x, y, z});
            }
        }
    }
    return out;
}

}  // namespace

MeshChunk extract_chunk(const VoxelGrid& grid, const Int3& chunk, double isovalue) {
    check_chunk(grid.shape(), chunk);
    return extract_unchecked(grid, chunk, isovalue);
}

std::vector<MeshChunk> extract_all(const VoxelGrid& grid, double isovalue) {
    std::vector<MeshChunk> out;
    for (const Int3& c : all_chunks(grid.shape())) {
        out.push_back(extract_unchecked(grid, c, isovalue));
    }
    return out;
}

ChunkMesher::ChunkMesher(const GridShape& shape, double isovalue)
    : shape_(shape), isovalue_(isovalue), versions_(shape.chunk_count(), 0), meshes_(shape.chunk_count()) {
    for (const Int3& c : all_chunks(shape_)) {
        meshes_[shape_.chunk_index(c)].coord = c;
    }
}

std::vector<MeshChunk> ChunkMesher::remesh_dirty(VoxelGrid& grid, unsigned workers) {
    if (!(grid.shape() == shape_)) {
        throw std::invalid_argument("grid shape does not match mesher");
    }
    const std::vector<Int3> dirty = grid.dirty_chunks();
    std::vector<MeshChunk> out(dirty.size());
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(dirty.size())));
    if (threads <= 1) {
        for (std::size_t n = 0; n < dirty.size(); ++n) {
            out[n] = extract_unchecked(grid, dirty[n], isovalue_);
        }
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t n = w; n < dirty.size(); n += threads) {
                    out[n] = extract_unchecked(grid, dirty[n], isovalue_);
                }
            });
        }
    }
    for (MeshChunk& chunk : out) {
        const std::size_t idx = shape_.chunk_index(chunk.coord);
        chunk.version = ++versions_[idx];
        meshes_[idx] = chunk;
    }
    grid.clear_dirty();
    return out;
}

std::vector<MeshChunk> ChunkMesher::current() const {
    std::vector<MeshChunk> out;
    for (const Int3& c : all_chunks(shape_)) {
        out.push_back(meshes_[shape_.chunk_index(c)]);
    }
    return out;
}

std::vector<MeshChunk> ChunkMesher::current_nonempty() const {
    std::vector<MeshChunk> out;
    for (const Int3& c : all_chunks(shape_)) {
        const MeshChunk& m = meshes_[shape_.chunk_index(c)];
        if (!m.empty()) {
            out.push_back(m);
        }
    }
    return out;
}

std::vector<MeshChunk> mesh_artifact(const SdfNode& sdf, const GridShape& shape) {
    const Aabb bounds = sdf_bounds(sdf);
    const double cs = shape.cell_size;
    std::vector<MeshChunk> out;
    for (const Int3& c : all_chunks(shape)) {
        // Samples touched by this chunk's cubes: q0-1 .. q1-1 per axis.
        bool overlaps = true;
        for (int axis = 0; axis < 3; ++axis) {
            const int q0 = c[axis] * shape.chunk_size;
            const int q1 = std::min(q0 + shape.chunk_size, shape.dims[axis] + 1);
            const double lo = shape.origin[axis] + (q0 - 1 + 0.5) * cs - cs;
            const double hi = shape.origin[axis] + (q1 - 1 + 0.5) * cs + cs;
            if (hi < bounds.min[axis] || lo > bounds.max[axis]) {
                overlaps = false;
            }
        }
        if (!overlaps) {
            continue;
        }
        const SampleBlock block(shape, c, [&](int i, int j, int k) { return -eval_sdf(sdf, shape.center(i, j, k)); });
        MeshChunk mesh = march(shape, c, 0.0, block);
        if (!mesh.empty()) {
            out.push_back(std::move(mesh));
        }
    }
    if (out.empty()) {
        throw DegenerateArtifactError("artifact sdf never crosses zero on the grid");
    }
    return out;
}

}  // namespace diglab
