#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "diglab/geometry.hpp"
#include "diglab/sdf.hpp"

namespace diglab {

enum class Label : std::uint8_t { Earth = 0, Artifact = 1, Empty = 2 };

inline constexpr double kEmptyThreshold = 0.5;
inline constexpr int kMaxGridCellsPerAxis = 512;
inline constexpr int kDefaultChunkSize = 16;

enum class Falloff : std::uint8_t { Hard, Linear };

struct SphereBrush {
    double radius = 0.0;
    friend constexpr bool operator==(const SphereBrush&, const SphereBrush&) = default;
};

struct BoxBrush {
    Vec3 half_extents;
    friend constexpr bool operator==(const BoxBrush&, const BoxBrush&) = default;
};

struct Brush {
    std::variant<SphereBrush, BoxBrush> shape;
    double strength = 1.0;  ///< density removed at the kernel peak per stroke, in (0, 1]
    Falloff falloff = Falloff::Hard;

    /// Throws ValidationError on non-positive sizes or strength outside (0, 1].
    void validate() const;
    /// Volume of the support in cubic meters.
    double support_volume() const;

    friend bool operator==(const Brush&, const Brush&) = default;
};

/// A brush at a pose. Answers containment and kernel weight for world points.
class PlacedBrush {
public:
    PlacedBrush(const Brush& brush, const Pose& pose);

    /// Kernel weight in [0, 1] when `p` lies in the support, nullopt otherwise.
    std::optional<double> weight(const Vec3& p) const;
    bool contains(const Vec3& p) const { return weight(p).has_value(); }
    const Aabb& bounds() const { return bounds_; }

private:
    Brush brush_;
    Vec3 center_;
    Mat3 rotation_;
    Aabb bounds_;
};

struct CarveResult {
    double removed_volume = 0.0;  ///< m^3
    std::size_t cells_changed = 0;
    std::size_t cells_emptied = 0;
    bool artifact_contact = false;
    std::optional<Vec3> contact_point;
    std::vector<Int3> emptied_cells;
};

/// Grid geometry. Cell (0,0,0) has its min corner at `origin`.
///
/// Marching cubes runs on the lattice of cell centers. Cube q along an axis
/// spans samples q-1 and q, so there are n+1 cubes per axis and the cubes on the
/// rim reach one sample outside the grid. Chunks tile cubes, not cells.
struct GridShape {
    Int3 dims;
    double cell_size = 0.0;
    Vec3 origin;
    int chunk_size = kDefaultChunkSize;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims.x) * static_cast<std::size_t>(dims.y) *
               static_cast<std::size_t>(dims.z);
    }
    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims.x && j < dims.y && k < dims.z;
    }
    bool in_bounds(const Int3& c) const { return in_bounds(c.x, c.y, c.z); }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims.y) * static_cast<std::size_t>(k));
    }
    std::size_t index(const Int3& c) const { return index(c.x, c.y, c.z); }
    Int3 coord(std::size_t idx) const {
        const auto nx = static_cast<std::size_t>(dims.x);
        const auto ny = static_cast<std::size_t>(dims.y);
        return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
    }
    /// World position of a cell center; accepts out-of-grid coordinates.
    Vec3 center(int i, int j, int k) const {
        return {origin.x + (i + 0.5) * cell_size, origin.y + (j + 0.5) * cell_size, origin.z + (k + 0.5) * cell_size};
    }
    Vec3 center(const Int3& c) const { return center(c.x, c.y, c.z); }
    /// Cell containing a world point (may be out of bounds).
    Int3 cell_at(const Vec3& p) const;
    /// Number of mesh chunks per axis.
    Int3 chunk_dims() const {
        return {(dims.x + chunk_size) / chunk_size, (dims.y + chunk_size) / chunk_size,
                (dims.z + chunk_size) / chunk_size};
    }
    std::size_t chunk_count() const {
        const Int3 c = chunk_dims();
        return static_cast<std::size_t>(c.x) * static_cast<std::size_t>(c.y) * static_cast<std::size_t>(c.z);
    }
    bool chunk_in_bounds(const Int3& c) const {
        const Int3 d = chunk_dims();
        return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < d.x && c.y < d.y && c.z < d.z;
    }
    std::size_t chunk_index(const Int3& c) const {
        const Int3 d = chunk_dims();
        return static_cast<std::size_t>(c.x) +
               static_cast<std::size_t>(d.x) * (static_cast<std::size_t>(c.y) + static_cast<std::size_t>(d.y) * c.z);
    }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct GridOptions {
    int chunk_size = kDefaultChunkSize;
    /// Density the mesher sees outside the grid. 0 closes the clod surface.
    double exterior_density = 0.0;
};

/// The clod: earth density plus material labels over a cubic grid.
///
/// Invariants: density in [0, 1]; ARTIFACT cells have density 0 and never
/// change; EMPTY <=> not ARTIFACT and density < 0.5. Single writer: carve must
/// not run concurrently with anything else on the same grid.
class VoxelGrid {
public:
    /// Builds a grid from explicit geometry. `artifact` may be null (no relic).
    VoxelGrid(GridShape shape, SdfPtr artifact, double exterior_density = 0.0);

    const GridShape& shape() const { return shape_; }
    const SdfPtr& artifact_sdf() const { return artifact_; }
    double exterior_density() const { return exterior_density_; }

    double density(const Int3& c) const { return density_[shape_.index(c)]; }
    double density(std::size_t idx) const { return density_[idx]; }
    Label label(const Int3& c) const { return static_cast<Label>(label_[shape_.index(c)]); }
    Label label(std::size_t idx) const { return static_cast<Label>(label_[idx]); }
    std::span<const double> densities() const { return density_; }
    std::span<const std::uint8_t> labels() const { return label_; }

    /// Density at a lattice sample, `exterior_density` outside the grid.
    double sample(int i, int j, int k) const {
        return shape_.in_bounds(i, j, k) ? density_[shape_.index(i, j, k)] : exterior_density_;
    }

    CarveResult carve(const Brush& brush, const Pose& pose);

    /// True when the support at `pose` covers at least one ARTIFACT cell center.
    bool overlaps_artifact(const Brush& brush, const Pose& pose) const;

    // Exposure bookkeeping, maintained incrementally by carve.
    const std::vector<Int3>& artifact_surface_cells() const { return surface_cells_; }
    std::size_t exposed_surface_count() const { return exposed_count_; }
    /// exposed / |surface|; throws DegenerateArtifactError when there is no surface.
    double exposure() const;

    double initial_earth_volume() const { return initial_earth_volume_; }
    /// Sum of every carve's removed_volume so far.
    double removed_total() const { return removed_total_; }
    /// Current earth volume, Σ density · cell³.
    double earth_volume() const;

    // Dirty chunk tracking for incremental meshing.
    std::vector<Int3> dirty_chunks() const;
    bool is_dirty(const Int3& chunk) const { return dirty_[shape_.chunk_index(chunk)] != 0; }
    std::size_t dirty_count() const { return dirty_count_; }
    void clear_dirty();
    void mark_all_dirty();

    std::size_t count_label(Label l) const;

private:
    friend VoxelGrid init_grid(double, double, const SdfPtr&, const GridOptions&);

    void mark_dirty_cells(const Int3& lo, const Int3& hi);
    void on_emptied(const Int3& c);

    GridShape shape_;
    SdfPtr artifact_;
    double exterior_density_ = 0.0;
    std::vector<double> density_;
    std::vector<std::uint8_t> label_;
    std::vector<std::uint8_t> surface_state_;  // bit0: artifact surface cell, bit1: exposed
    std::vector<Int3> surface_cells_;
    std::size_t exposed_count_ = 0;
    std::vector<std::uint8_t> dirty_;
    std::size_t dirty_count_ = 0;
    double initial_earth_volume_ = 0.0;
    double removed_total_ = 0.0;
};

/// Cubic clod of edge `clod_edge` centered on the world origin, labelled from `artifact_sdf`.
/// Throws ValidationError on bad sizes or more than 512 cells per axis, and
/// DegenerateArtifactError when an ARTIFACT cell sits on the grid boundary.
VoxelGrid init_grid(double clod_edge, double cell_size, const SdfPtr& artifact_sdf, const GridOptions& options = {});

/// Fraction of `surface_cells` having a face neighbor that is EMPTY or outside the grid.
/// Full scan; VoxelGrid::exposure() is the incremental equivalent.
double exposure_fraction(const VoxelGrid& grid, std::span<const Int3> surface_cells);

}  // namespace diglab
