#pragma once

#include <cstdint>
#include <vector>

#include "diglab/mesh.hpp"
#include "diglab/sdf.hpp"
#include "diglab/voxel_grid.hpp"

namespace diglab {

/// Isovalue shared by the mesher and the EMPTY label threshold.
inline constexpr double kEarthIsovalue = kEmptyThreshold;

/// Marching cubes over one chunk of the earth density field. Samples one
/// lattice point of apron past the chunk so neighbouring chunks agree on their
/// shared faces. Deterministic; returned version is 0.
/// Throws std::out_of_range when `chunk` is outside the grid's chunk range.
MeshChunk extract_chunk(const VoxelGrid& grid, const Int3& chunk, double isovalue = kEarthIsovalue);

/// Extracts every chunk of the grid from scratch (versions 0), in chunk order.
std::vector<MeshChunk> extract_all(const VoxelGrid& grid, double isovalue = kEarthIsovalue);

/// Incremental earth mesher. Keeps the latest mesh and version of every chunk.
class ChunkMesher {
public:
    explicit ChunkMesher(const GridShape& shape, double isovalue = kEarthIsovalue);

    /// Re-extracts exactly the grid's dirty chunks (ordered by chunk coordinate),
    /// bumps their versions and clears the dirty set. `workers` > 1 extracts in parallel.
    std::vector<MeshChunk> remesh_dirty(VoxelGrid& grid, unsigned workers = 1);

    /// Latest mesh of every chunk meshed so far, ordered by chunk coordinate.
    std::vector<MeshChunk> current() const;
    /// Latest non-empty chunks only.
    std::vector<MeshChunk> current_nonempty() const;

    std::uint64_t version(const Int3& chunk) const { return versions_[shape_.chunk_index(chunk)]; }

private:
    GridShape shape_;
    double isovalue_;
    std::vector<std::uint64_t> versions_;
    std::vector<MeshChunk> meshes_;
};

/// One-time artifact mesh: marching cubes of the SDF at isovalue 0 on the
/// grid's lattice. Returns the non-empty chunks; throws DegenerateArtifactError
/// when the SDF never crosses zero on the lattice.
std::vector<MeshChunk> mesh_artifact(const SdfNode& sdf, const GridShape& shape);

}  // namespace diglab
