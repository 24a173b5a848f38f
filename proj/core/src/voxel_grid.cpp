#include "diglab/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diglab/error.hpp"

namespace diglab {
namespace {

constexpr std::uint8_t kSurfaceBit = 1;
constexpr std::uint8_t kExposedBit = 2;

constexpr Int3 kFaceOffsets[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

void Brush::validate() const {
    if (!(strength > 0.0) || strength > 1.0) {
        throw ValidationError("brush strength must be in (0, 1]");
    }
    if (const auto* s = std::get_if<SphereBrush>(&shape)) {
        if (!(s->radius > 0.0) || !std::isfinite(s->radius)) {
            throw ValidationError("sphere brush radius must be positive");
        }
    } else {
        const auto& h = std::get<BoxBrush>(shape).half_extents;
        if (!(h.x > 0.0) || !(h.y > 0.0) || !(h.z > 0.0) || !std::isfinite(h.x) || !std::isfinite(h.y) ||
            !std::isfinite(h.z)) {
            throw ValidationError("box brush half_extents must be positive");
        }
    }
}

double Brush::support_volume() const {
    if (const auto* s = std::get_if<SphereBrush>(&shape)) {
        return 4.0 / 3.0 * 3.14159265358979323846 * s->radius * s->radius * s->radius;
    }
    const auto& h = std::get<BoxBrush>(shape).half_extents;
    return 8.0 * h.x * h.y * h.z;
}

PlacedBrush::PlacedBrush(const Brush& brush, const Pose& pose)
    : brush_(brush), center_(pose.position), rotation_(Mat3::from_quat(pose.orientation)) {
    Vec3 reach;
    if (const auto* s = std::get_if<SphereBrush>(&brush_.shape)) {
        reach = {s->radius, s->radius, s->radius};
    } else {
        const auto& h = std::get<BoxBrush>(brush_.shape).half_extents;
        const auto& m = rotation_.m;
        reach = {std::fabs(m[0]) * h.x + std::fabs(m[1]) * h.y + std::fabs(m[2]) * h.z,
                 std::fabs(m[3]) * h.x + std::fabs(m[4]) * h.y + std::fabs(m[5]) * h.z,
                 std::fabs(m[6]) * h.x + std::fabs(m[7]) * h.y + std::fabs(m[8]) * h.z};
    }
    bounds_ = {center_ - reach, center_ + reach};
}

std::optional<double> PlacedBrush::weight(const Vec3& p) const {
    if (const auto* s = std::get_if<SphereBrush>(&brush_.shape)) {
        const Vec3 d = p - center_;
        const double d2 = dot(d, d);
        if (!(d2 <= s->radius * s->radius)) {
            return std::nullopt;
        }
        if (brush_.falloff == Falloff::Hard) {
            return 1.0;
        }
        return 1.0 - std::sqrt(d2) / s->radius;
    }
    const auto& h = std::get<BoxBrush>(brush_.shape).half_extents;
    const Vec3 local = rotation_.apply_transposed(p - center_);
    const Vec3 a = abs(local);
    if (!(a.x <= h.x && a.y <= h.y && a.z <= h.z)) {
        return std::nullopt;
    }
    if (brush_.falloff == Falloff::Hard) {
        return 1.0;
    }
    return 1.0 - std::fmax(a.x / h.x, std::fmax(a.y / h.y, a.z / h.z));
}

Int3 GridShape::cell_at(const Vec3& p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / cell_size)),
            static_cast<int>(std::floor((p.y - origin.y) / cell_size)),
            static_cast<int>(std::floor((p.z - origin.z) / cell_size))};
}

VoxelGrid::VoxelGrid(GridShape shape, SdfPtr artifact, double exterior_density)
    : shape_(shape), artifact_(std::move(artifact)), exterior_density_(exterior_density) {
    if (shape_.dims.x <= 0 || shape_.dims.y <= 0 || shape_.dims.z <= 0) {
        throw ValidationError("grid dimensions must be positive");
    }
    if (shape_.dims.x > kMaxGridCellsPerAxis || shape_.dims.y > kMaxGridCellsPerAxis ||
        shape_.dims.z > kMaxGridCellsPerAxis) {
        throw ValidationError("grid dimension overflow: more than " + std::to_string(kMaxGridCellsPerAxis) +
                              " cells per axis");
    }
    if (!(shape_.cell_size > 0.0) || shape_.chunk_size <= 0) {
        throw ValidationError("cell_size and chunk_size must be positive");
    }
    const std::size_t n = shape_.cell_count();
    density_.assign(n, 1.0);
    label_.assign(n, static_cast<std::uint8_t>(Label::Earth));
    surface_state_.assign(n, 0);
    dirty_.assign(shape_.chunk_count(), 0);

    if (artifact_) {
        const Aabb bounds = sdf_bounds(*artifact_);
        for (int k = 0; k < shape_.dims.z; ++k) {
            for (int j = 0; j < shape_.dims.y; ++j) {
                for (int i = 0; i < shape_.dims.x; ++i) {
                    const Vec3 c = shape_.center(i, j, k);
                    if (c.x < bounds.min.x || c.y < bounds.min.y || c.z < bounds.min.z || c.x > bounds.max.x ||
                        c.y > bounds.max.y || c.z > bounds.max.z) {
                        continue;
                    }
                    if (eval_sdf(*artifact_, c) <= 0.0) {
                        const std::size_t idx = shape_.index(i, j, k);
                        label_[idx] = static_cast<std::uint8_t>(Label::Artifact);
                        density_[idx] = 0.0;
                    }
                }
            }
        }
    }
    mark_all_dirty();
}

void VoxelGrid::mark_all_dirty() {
    std::fill(dirty_.begin(), dirty_.end(), std::uint8_t{1});
    dirty_count_ = dirty_.size();
}

void VoxelGrid::clear_dirty() {
    std::fill(dirty_.begin(), dirty_.end(), std::uint8_t{0});
    dirty_count_ = 0;
}

std::vector<Int3> VoxelGrid::dirty_chunks() const {
    std::vector<Int3> out;
    out.reserve(dirty_count_);
    const Int3 d = shape_.chunk_dims();
    for (int x = 0; x < d.x; ++x) {
        for (int y = 0; y < d.y; ++y) {
            for (int z = 0; z < d.z; ++z) {
                if (dirty_[shape_.chunk_index({x, y, z})] != 0) {
                    out.push_back({x, y, z});
                }
            }
        }
    }
    return out;
}

// A cell value feeds cubes i-1 .. i+2 on each axis: i and i+1 as a corner,
// i-1 .. i+2 through the central-difference normals of neighbouring corners.
void VoxelGrid::mark_dirty_cells(const Int3& lo, const Int3& hi) {
    const int cs = shape_.chunk_size;
    Int3 c0;
    Int3 c1;
    for (int axis = 0; axis < 3; ++axis) {
        const int n = shape_.dims[axis];
        const int q0 = std::max(lo[axis] - 1, 0);
        const int q1 = std::min(hi[axis] + 2, n);
        const int a = floor_div(q0, cs);
        const int b = floor_div(q1, cs);
        (axis == 0 ? c0.x : axis == 1 ? c0.y : c0.z) = a;
        (axis == 0 ? c1.x : axis == 1 ? c1.y : c1.z) = b;
    }
    for (int z = c0.z; z <= c1.z; ++z) {
        for (int y = c0.y; y <= c1.y; ++y) {
            for (int x = c0.x; x <= c1.x; ++x) {
                auto& flag = dirty_[shape_.chunk_index({x, y, z})];
                if (flag == 0) {
                    flag = 1;
                    ++dirty_count_;
                }
            }
        }
    }
}

void VoxelGrid::on_emptied(const Int3& c) {
    for (const Int3& o : kFaceOffsets) {
        const Int3 nb{c.x + o.x, c.y + o.y, c.z + o.z};
        if (!shape_.in_bounds(nb)) {
            continue;
        }
        auto& state = surface_state_[shape_.index(nb)];
        if ((state & kSurfaceBit) != 0 && (state & kExposedBit) == 0) {
            state |= kExposedBit;
            ++exposed_count_;
        }
    }
}

CarveResult VoxelGrid::carve(const Brush& brush, const Pose& pose) {
    CarveResult result;
    const PlacedBrush placed(brush, pose);
    const Aabb& box = placed.bounds();
    const double cs = shape_.cell_size;
    const double pad = cs * 1e-6;

    Int3 lo;
    Int3 hi;
    for (int axis = 0; axis < 3; ++axis) {
        const double o = shape_.origin[axis];
        const double a = std::ceil((box.min[axis] - pad - o) / cs - 0.5);
        const double b = std::floor((box.max[axis] + pad - o) / cs - 0.5);
        const double n = shape_.dims[axis];
        const int ia = static_cast<int>(std::clamp(a, 0.0, n));
        const int ib = static_cast<int>(std::clamp(b, -1.0, n - 1.0));
        (axis == 0 ? lo.x : axis == 1 ? lo.y : lo.z) = ia;
        (axis == 0 ? hi.x : axis == 1 ? hi.y : hi.z) = ib;
    }
    if (lo.x > hi.x || lo.y > hi.y || lo.z > hi.z) {
        return result;
    }

    double removed = 0.0;
    double best_sdf = std::numeric_limits<double>::infinity();
    Int3 best_cell{};
    Int3 changed_lo{hi.x, hi.y, hi.z};
    Int3 changed_hi{lo.x, lo.y, lo.z};

    for (int k = lo.z; k <= hi.z; ++k) {
        for (int j = lo.y; j <= hi.y; ++j) {
            for (int i = lo.x; i <= hi.x; ++i) {
                const std::size_t idx = shape_.index(i, j, k);
                const auto lbl = static_cast<Label>(label_[idx]);
                if (lbl == Label::Empty) {
                    continue;
                }
                const Vec3 c = shape_.center(i, j, k);
                const std::optional<double> w = placed.weight(c);
                if (!w) {
                    continue;
                }
                if (lbl == Label::Artifact) {
                    result.artifact_contact = true;
                    const double d = artifact_ ? eval_sdf(*artifact_, c) : 0.0;
                    const Int3 cell{i, j, k};
                    if (d < best_sdf || (d == best_sdf && cell < best_cell)) {
                        best_sdf = d;
                        best_cell = cell;
                    }
                    continue;
                }
                const double drop = std::fmin(density_[idx], brush.strength * *w);
                if (!(drop > 0.0)) {
                    continue;
                }
                density_[idx] -= drop;
                removed += drop;
                ++result.cells_changed;
                changed_lo = {std::min(changed_lo.x, i), std::min(changed_lo.y, j), std::min(changed_lo.z, k)};
                changed_hi = {std::max(changed_hi.x, i), std::max(changed_hi.y, j), std::max(changed_hi.z, k)};
                if (density_[idx] < kEmptyThreshold) {
                    label_[idx] = static_cast<std::uint8_t>(Label::Empty);
                    result.emptied_cells.push_back({i, j, k});
                    on_emptied({i, j, k});
                }
            }
        }
    }

    result.cells_emptied = result.emptied_cells.size();
    result.removed_volume = removed * cs * cs * cs;
    if (result.artifact_contact) {
        result.contact_point = shape_.center(best_cell);
    }
    if (result.cells_changed > 0) {
        mark_dirty_cells(changed_lo, changed_hi);
    }
    removed_total_ += result.removed_volume;
    return result;
}

bool VoxelGrid::overlaps_artifact(const Brush& brush, const Pose& pose) const {
    const PlacedBrush placed(brush, pose);
    const Aabb& box = placed.bounds();
    const double cs = shape_.cell_size;
    const double pad = cs * 1e-6;
    Int3 lo;
    Int3 hi;
    for (int axis = 0; axis < 3; ++axis) {
        const double o = shape_.origin[axis];
        const double n = shape_.dims[axis];
        const int ia = static_cast<int>(std::clamp(std::ceil((box.min[axis] - pad - o) / cs - 0.5), 0.0, n));
        const int ib = static_cast<int>(std::clamp(std::floor((box.max[axis] + pad - o) / cs - 0.5), -1.0, n - 1.0));
        (axis == 0 ? lo.x : axis == 1 ? lo.y : lo.z) = ia;
        (axis == 0 ? hi.x : axis == 1 ? hi.y : hi.z) = ib;
    }
    for (int k = lo.z; k <= hi.z; ++k) {
        for (int j = lo.y; j <= hi.y; ++j) {
            for (int i = lo.x; i <= hi.x; ++i) {
                if (static_cast<Label>(label_[shape_.index(i, j, k)]) == Label::Artifact &&
                    placed.contains(shape_.center(i, j, k))) {
                    return true;
                }
            }
        }
    }
    return false;
}

double VoxelGrid::exposure() const {
    if (surface_cells_.empty()) {
        throw DegenerateArtifactError("artifact has no surface cells");
    }
    return static_cast<double>(exposed_count_) / static_cast<double>(surface_cells_.size());
}

double VoxelGrid::earth_volume() const {
    double sum = 0.0;
    for (const double d : density_) {
        sum += d;
    }
    const double cs = shape_.cell_size;
    return sum * cs * cs * cs;
}

std::size_t VoxelGrid::count_label(Label l) const {
    return static_cast<std::size_t>(
        std::count(label_.begin(), label_.end(), static_cast<std::uint8_t>(l)));
}

VoxelGrid init_grid(double clod_edge, double cell_size, const SdfPtr& artifact_sdf, const GridOptions& options) {
    if (!(clod_edge > 0.0) || !(cell_size > 0.0) || !std::isfinite(clod_edge) || !std::isfinite(cell_size)) {
        throw ValidationError("clod_edge and cell_size must be positive");
    }
    const double ratio = clod_edge / cell_size;
    const double nearest = std::round(ratio);
    const double cells = std::fabs(ratio - nearest) <= 1e-9 * ratio ? nearest : std::ceil(ratio);
    if (cells > kMaxGridCellsPerAxis) {
        throw ValidationError("grid dimension overflow: " + std::to_string(static_cast<long long>(cells)) +
                              " cells per axis exceeds " + std::to_string(kMaxGridCellsPerAxis));
    }
    const int n = static_cast<int>(cells);
    const double half = clod_edge * 0.5;
    GridShape shape{{n, n, n}, cell_size, {-half, -half, -half}, options.chunk_size};
    VoxelGrid grid(shape, artifact_sdf, options.exterior_density);

    // Cells whose centers fall outside the clod cube (edge not a multiple of cell_size).
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 c = shape.center(i, j, k);
                const bool outside = c.x > half || c.y > half || c.z > half;
                const std::size_t idx = shape.index(i, j, k);
                if (grid.label_[idx] == static_cast<std::uint8_t>(Label::Artifact)) {
                    if (outside || i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1) {
                        throw DegenerateArtifactError("artifact is not strictly inside the clod: cell (" +
                                                      std::to_string(i) + "," + std::to_string(j) + "," +
                                                      std::to_string(k) + ") touches the boundary");
                    }
                } else if (outside) {
                    grid.density_[idx] = 0.0;
                    grid.label_[idx] = static_cast<std::uint8_t>(Label::Empty);
                }
            }
        }
    }

    // Artifact surface cells and their initial exposure.
    for (std::size_t idx = 0; idx < grid.label_.size(); ++idx) {
        if (grid.label_[idx] != static_cast<std::uint8_t>(Label::Artifact)) {
            continue;
        }
        const Int3 c = shape.coord(idx);
        bool surface = false;
        bool exposed = false;
        for (const Int3& o : kFaceOffsets) {
            const Int3 nb{c.x + o.x, c.y + o.y, c.z + o.z};
            if (!shape.in_bounds(nb)) {
                surface = exposed = true;
                continue;
            }
            const auto l = static_cast<Label>(grid.label_[shape.index(nb)]);
            if (l != Label::Artifact) {
                surface = true;
                exposed = exposed || l == Label::Empty;
            }
        }
        if (surface) {
            grid.surface_state_[idx] = kSurfaceBit | (exposed ? kExposedBit : 0);
            grid.surface_cells_.push_back(c);
            grid.exposed_count_ += exposed ? 1 : 0;
        }
    }

    double sum = 0.0;
    for (const double d : grid.density_) {
        sum += d;
    }
    grid.initial_earth_volume_ = sum * cell_size * cell_size * cell_size;
    return grid;
}

double exposure_fraction(const VoxelGrid& grid, std::span<const Int3> surface_cells) {
    if (surface_cells.empty()) {
        throw DegenerateArtifactError("artifact has no surface cells");
    }
    const GridShape& shape = grid.shape();
    std::size_t exposed = 0;
    for (const Int3& c : surface_cells) {
        for (const Int3& o : kFaceOffsets) {
            const Int3 nb{c.x + o.x, c.y + o.y, c.z + o.z};
            if (!shape.in_bounds(nb) || grid.label(nb) == Label::Empty) {
                ++exposed;
                break;
            }
        }
    }
    return static_cast<double>(exposed) / static_cast<double>(surface_cells.size());
}

}  // namespace diglab
