#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "diglab/geometry.hpp"

namespace diglab {

struct SdfNode;

/// SDF trees are immutable once built and shared between grids, sessions and threads.
using SdfPtr = std::shared_ptr<const SdfNode>;

struct SdfSphere {
    Vec3 center;
    double radius = 0.0;
};

struct SdfBox {
    Vec3 center;
    Vec3 half_extents;
};

struct SdfCapsule {
    Vec3 p0;
    Vec3 p1;
    double radius = 0.0;
};

struct SdfUnion {
    std::vector<SdfPtr> children;
};

struct SdfTranslate {
    SdfPtr child;
    Vec3 offset;
};

struct SdfScale {
    SdfPtr child;
    double factor = 1.0;
};

struct SdfNode {
    std::variant<SdfSphere, SdfBox, SdfCapsule, SdfUnion, SdfTranslate, SdfScale> shape;

    /// Structural (deep) equality.
    friend bool operator==(const SdfNode& a, const SdfNode& b);
};

inline constexpr int kMaxSdfDepth = 32;

struct Aabb {
    Vec3 min;
    Vec3 max;
};

SdfPtr make_sphere(Vec3 center, double radius);
SdfPtr make_box(Vec3 center, Vec3 half_extents);
SdfPtr make_capsule(Vec3 p0, Vec3 p1, double radius);
SdfPtr make_union(std::vector<SdfPtr> children);
SdfPtr make_translate(SdfPtr child, Vec3 offset);
SdfPtr make_scale(SdfPtr child, double factor);

/// Signed distance in meters, negative inside.
double eval_sdf(const SdfNode& node, const Vec3& p);

/// Conservative world-space bounds of the zero-or-negative region.
Aabb sdf_bounds(const SdfNode& node);

int sdf_depth(const SdfNode& node);

/// Throws ValidationError when a radius/extent/factor is non-positive or
/// non-finite, a union is empty, a child is missing, or depth exceeds kMaxSdfDepth.
void validate_sdf(const SdfNode& node);

}  // namespace diglab
