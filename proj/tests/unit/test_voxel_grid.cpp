#include <algorithm>
#include <cmath>
#include <random>

#include "diglab/error.hpp"
#include "diglab/voxel_grid.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace diglab;

namespace {

Brush sphere_brush(double r, double strength = 1.0, Falloff f = Falloff::Hard) {
    return Brush{SphereBrush{r}, strength, f};
}

Brush box_brush(Vec3 h, double strength = 1.0, Falloff f = Falloff::Hard) {
    return Brush{BoxBrush{h}, strength, f};
}

Quat random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return normalized(Quat{n(rng), n(rng), n(rng), n(rng)});
}

VoxelGrid small_sphere_grid() { return init_grid(1.0, 0.02, make_sphere({0, 0, 0}, 0.3)); }

}  // namespace

TEST_CASE("init_grid labels match a brute-force ball count") {
    const VoxelGrid g = init_grid(2.0, 0.02, make_sphere({0, 0, 0}, 0.5));
    CHECK(g.shape().dims == Int3{100, 100, 100});
    CHECK(g.count_label(Label::Artifact) == oracle::cells_in_ball(100, 0.02, 0.5));
    CHECK(g.count_label(Label::Empty) == 0);
    for (std::size_t i = 0; i < g.shape().cell_count(); ++i) {
        if (g.label(i) == Label::Artifact) {
            REQUIRE(g.density(i) == 0.0);
        } else {
            REQUIRE(g.density(i) == 1.0);
        }
    }
}

TEST_CASE("coarse grid can miss a small relic entirely") {
    const VoxelGrid g = init_grid(1.0, 0.5, make_sphere({0, 0, 0}, 0.1));
    CHECK(g.shape().dims == Int3{2, 2, 2});
    CHECK(g.count_label(Label::Artifact) == 0);
    CHECK_THROWS_AS((void)g.exposure(), DegenerateArtifactError);
}

TEST_CASE("init_grid errors") {
    CHECK_THROWS_AS(init_grid(2.0, 0.02, make_sphere({0, 0, 0}, 1.5)), DegenerateArtifactError);
    CHECK_THROWS_AS(init_grid(2.0, 0.003, make_sphere({0, 0, 0}, 0.5)), ValidationError);
    CHECK_THROWS_AS(init_grid(-1.0, 0.02, make_sphere({0, 0, 0}, 0.5)), ValidationError);
    CHECK_THROWS_AS(init_grid(1.0, 0.0, make_sphere({0, 0, 0}, 0.2)), ValidationError);
}

TEST_CASE("hard sphere in deep earth matches the containment oracle") {
    VoxelGrid g = init_grid(2.0, 0.02, make_sphere({0, 0, 0}, 0.3));
    const auto before = oracle::snapshot(g);
    const Brush b = sphere_brush(0.04);
    const Pose pose{{0.61, -0.33, 0.47}, Quat::identity()};
    const auto expect = oracle::carve(g.shape(), before, b, pose);
    const CarveResult r = g.carve(b, pose);
    CHECK(r.cells_changed > 0);
    CHECK(r.cells_changed == expect.cells_changed);
    CHECK(r.cells_emptied == expect.cells_emptied);
    CHECK(r.removed_volume == expect.removed_volume);
    CHECK(r.removed_volume == doctest::Approx(static_cast<double>(expect.cells_changed) * 8e-6).epsilon(1e-12));
    CHECK_FALSE(r.artifact_contact);
    CHECK_FALSE(r.contact_point.has_value());
    CHECK(r.emptied_cells.size() == r.cells_emptied);
    CHECK(oracle::snapshot(g).density == expect.after.density);
    CHECK(oracle::snapshot(g).label == expect.after.label);
}

TEST_CASE("carving an emptied region removes nothing") {
    VoxelGrid g = small_sphere_grid();
    const Pose pose{{0.4, 0.4, 0.4}, Quat::identity()};
    CHECK(g.carve(sphere_brush(0.08), pose).removed_volume > 0.0);
    const CarveResult again = g.carve(sphere_brush(0.05), pose);
    CHECK(again.removed_volume == 0.0);
    CHECK(again.cells_changed == 0);
    CHECK_FALSE(again.artifact_contact);
}

TEST_CASE("out-of-grid brush is a no-op") {
    VoxelGrid g = small_sphere_grid();
    g.clear_dirty();
    const auto before = oracle::snapshot(g);
    const CarveResult r = g.carve(sphere_brush(0.1), {{5.0, 5.0, 5.0}, Quat::identity()});
    CHECK(r.cells_changed == 0);
    CHECK(oracle::snapshot(g).density == before.density);
    CHECK(g.dirty_count() == 0);
}

TEST_CASE("box stroke over the relic reports contact and leaves it intact") {
    VoxelGrid g = small_sphere_grid();
    const auto before = oracle::snapshot(g);
    const Brush shovel = box_brush({0.10, 0.06, 0.015});
    const Pose pose{{0.0, 0.31, 0.0}, Quat::from_axis_angle({0, 1, 0}, 0.4)};
    const CarveResult r = g.carve(shovel, pose);
    REQUIRE(r.artifact_contact);
    REQUIRE(r.contact_point.has_value());
    CHECK(PlacedBrush(shovel, pose).contains(*r.contact_point));
    CHECK(eval_sdf(*g.artifact_sdf(), *r.contact_point) <= 0.0);
    for (std::size_t i = 0; i < before.label.size(); ++i) {
        if (before.label[i] == static_cast<std::uint8_t>(Label::Artifact)) {
            REQUIRE(g.label(i) == Label::Artifact);
            REQUIRE(g.density(i) == 0.0);
        }
    }
    const auto expect = oracle::carve(g.shape(), before, shovel, pose);
    CHECK(r.cells_changed == expect.cells_changed);
    CHECK(r.removed_volume == expect.removed_volume);
}

TEST_CASE("contact point is the deepest covered artifact cell") {
    VoxelGrid g = small_sphere_grid();
    const Brush b = sphere_brush(0.05);
    const Pose pose{{0.05, 0.29, -0.02}, Quat::identity()};
    const GridShape& s = g.shape();
    double best = 1e9;
    Int3 best_cell{};
    for (int k = 0; k < s.dims.z; ++k) {
        for (int j = 0; j < s.dims.y; ++j) {
            for (int i = 0; i < s.dims.x; ++i) {
                const Vec3 c = s.center(i, j, k);
                if (g.label(Int3{i, j, k}) != Label::Artifact || !oracle::inside_brush(b, pose, c)) {
                    continue;
                }
                const double d = eval_sdf(*g.artifact_sdf(), c);
                if (d < best) {
                    best = d;
                    best_cell = {i, j, k};
                }
            }
        }
    }
    const CarveResult r = g.carve(b, pose);
    REQUIRE(r.contact_point.has_value());
    CHECK(*r.contact_point == s.center(best_cell));
}

TEST_CASE("linear falloff weights by distance to the support boundary") {
    VoxelGrid g = small_sphere_grid();
    const GridShape& s = g.shape();
    const Int3 c{10, 10, 10};
    const Brush b = sphere_brush(0.05, 1.0, Falloff::Linear);
    g.carve(b, {s.center(c), Quat::identity()});
    CHECK(g.density(c) == 0.0);
    CHECK(g.density(Int3{11, 10, 10}) == doctest::Approx(1.0 - 0.6));
    CHECK(g.density(Int3{12, 10, 10}) == doctest::Approx(1.0 - 0.2));
    CHECK(g.density(Int3{13, 10, 10}) == 1.0);
    CHECK(g.label(Int3{11, 10, 10}) == Label::Empty);
    CHECK(g.label(Int3{12, 10, 10}) == Label::Earth);
}

TEST_CASE("random stroke sequence keeps every grid invariant") {
    VoxelGrid g = small_sphere_grid();
    const GridShape& s = g.shape();
    const auto initial = oracle::snapshot(g);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(-0.5, 0.5);
    std::uniform_real_distribution<double> size(0.01, 0.12);
    std::uniform_real_distribution<double> strength(0.05, 1.0);
    double accumulated = 0.0;
    double last_total = 0.0;
    double last_exposure = g.exposure();
    for (int n = 0; n < 300; ++n) {
        const Falloff f = (n % 3 == 0) ? Falloff::Linear : Falloff::Hard;
        const Brush b = (n % 2 == 0) ? sphere_brush(size(rng), strength(rng), f)
                                     : box_brush({size(rng), size(rng), size(rng) * 0.5}, strength(rng), f);
        const Pose pose{{pos(rng), pos(rng), pos(rng)}, random_rotation(rng)};
        const auto before = oracle::snapshot(g);
        const CarveResult r = g.carve(b, pose);

        CHECK(r.removed_volume >= 0.0);
        accumulated += r.removed_volume;
        REQUIRE(g.removed_total() == accumulated);
        CHECK(g.removed_total() >= last_total);
        last_total = g.removed_total();

        // locality: nothing outside the cell-aligned bounds of the support moves
        const Aabb box = PlacedBrush(b, pose).bounds();
        const Int3 lo = s.cell_at(box.min);
        const Int3 hi = s.cell_at(box.max);
        for (std::size_t idx = 0; idx < before.density.size(); ++idx) {
            const double d = g.density(idx);
            REQUIRE(d >= 0.0);
            REQUIRE(d <= 1.0);
            const Int3 c = s.coord(idx);
            const bool inside = c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y && c.z >= lo.z && c.z <= hi.z;
            if (!inside) {
                REQUIRE(d == before.density[idx]);
                REQUIRE(static_cast<std::uint8_t>(g.label(idx)) == before.label[idx]);
            }
            if (initial.label[idx] == static_cast<std::uint8_t>(Label::Artifact)) {
                REQUIRE(g.label(idx) == Label::Artifact);
            } else {
                REQUIRE(g.label(idx) != Label::Artifact);
                REQUIRE((g.label(idx) == Label::Empty) == (d < 0.5));
            }
        }
        const double e = g.exposure();
        CHECK(e >= last_exposure);
        CHECK(e <= 1.0);
        last_exposure = e;
    }
    CHECK(g.removed_total() == doctest::Approx(g.initial_earth_volume() - g.earth_volume()).epsilon(1e-9));
}

TEST_CASE("removed_total starts at zero and sums one stroke") {
    VoxelGrid g = small_sphere_grid();
    CHECK(g.removed_total() == 0.0);
    const CarveResult r = g.carve(sphere_brush(0.05), {{0.4, -0.4, 0.1}, Quat::identity()});
    CHECK(g.removed_total() == r.removed_volume);
}

TEST_CASE("exposure: fresh grid, fully carved grid, hemisphere") {
    VoxelGrid g = init_grid(2.0, 0.02, make_sphere({0, 0, 0}, 0.5));
    const auto& surf = g.artifact_surface_cells();
    CHECK(g.exposure() == 0.0);
    CHECK(exposure_fraction(g, surf) == 0.0);
    CHECK(oracle::exposure(g.shape(), g.labels()).surface == surf.size());

    g.carve(box_brush({1.0, 0.5, 1.0}), {{0.0, 0.5, 0.0}, Quat::identity()});
    const auto o = oracle::exposure(g.shape(), g.labels());
    CHECK(o.exposed > 0);
    CHECK(o.exposed < o.surface);
    CHECK(g.exposure() == o.fraction());
    CHECK(exposure_fraction(g, surf) == o.fraction());

    g.carve(box_brush({1.0, 1.0, 1.0}), {{0.0, 0.0, 0.0}, Quat::identity()});
    CHECK(g.count_label(Label::Earth) == 0);
    CHECK(g.exposure() == 1.0);
    CHECK(exposure_fraction(g, surf) == 1.0);
    CHECK_THROWS_AS((void)exposure_fraction(g, {}), DegenerateArtifactError);
}

TEST_CASE("dirty chunks cover the stroke plus mesher apron") {
    VoxelGrid g = init_grid(2.0, 0.02, make_sphere({0, 0, 0}, 0.3));
    // a new grid has never been meshed
    CHECK(g.dirty_count() == g.shape().chunk_count());
    g.clear_dirty();
    const GridShape& s = g.shape();
    g.carve(sphere_brush(0.05), {s.center(22, 22, 22), Quat::identity()});
    CHECK(g.dirty_chunks() == std::vector<Int3>{{1, 1, 1}});
    g.clear_dirty();
    g.carve(sphere_brush(0.05), {s.center(16, 22, 22), Quat::identity()});
    CHECK(g.dirty_chunks() == std::vector<Int3>{{0, 1, 1}, {1, 1, 1}});
    g.mark_all_dirty();
    CHECK(g.dirty_count() == s.chunk_count());
}

TEST_CASE("overlaps_artifact agrees with brute force") {
    const VoxelGrid g = small_sphere_grid();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-0.45, 0.45);
    const Brush b = box_brush({0.10, 0.06, 0.015});
    const GridShape& s = g.shape();
    for (int n = 0; n < 100; ++n) {
        const Pose pose{{pos(rng), pos(rng), pos(rng)}, random_rotation(rng)};
        bool any = false;
        for (std::size_t idx = 0; idx < s.cell_count() && !any; ++idx) {
            any = g.label(idx) == Label::Artifact && oracle::inside_brush(b, pose, s.center(s.coord(idx)));
        }
        CHECK(g.overlaps_artifact(b, pose) == any);
    }
}

TEST_CASE("brush validation") {
    CHECK_THROWS_AS(sphere_brush(0.0).validate(), ValidationError);
    CHECK_THROWS_AS(sphere_brush(0.1, 1.5).validate(), ValidationError);
    CHECK_THROWS_AS(sphere_brush(0.1, 0.0).validate(), ValidationError);
    CHECK_THROWS_AS(box_brush({0.1, 0.0, 0.1}).validate(), ValidationError);
    CHECK(sphere_brush(0.05).support_volume() == doctest::Approx(4.0 / 3.0 * M_PI * 1.25e-4));
    CHECK(box_brush({0.1, 0.06, 0.015}).support_volume() == doctest::Approx(8 * 0.1 * 0.06 * 0.015));
}
