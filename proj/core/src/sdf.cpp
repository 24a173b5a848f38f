#include "diglab/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diglab/error.hpp"

namespace diglab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void validate_at(const SdfNode& node, int depth, const std::string& path) {
    if (depth > kMaxSdfDepth) {
        throw ValidationError(path + ": sdf tree deeper than " + std::to_string(kMaxSdfDepth));
    }
    std::visit(Overloaded{
                   [&](const SdfSphere& s) {
                       if (!finite(s.center) || !(s.radius > 0.0) || !std::isfinite(s.radius)) {
                           throw ValidationError(path + ": sphere radius must be positive and finite");
                       }
                   },
                   [&](const SdfBox& b) {
                       if (!finite(b.center) || !finite(b.half_extents) || !(b.half_extents.x > 0.0) ||
                           !(b.half_extents.y > 0.0) || !(b.half_extents.z > 0.0)) {
                           throw ValidationError(path + ": box half_extents must be positive and finite");
                       }
                   },
                   [&](const SdfCapsule& c) {
                       if (!finite(c.p0) || !finite(c.p1) || !(c.radius > 0.0) || !std::isfinite(c.radius)) {
                           throw ValidationError(path + ": capsule radius must be positive and finite");
                       }
                   },
                   [&](const SdfUnion& u) {
                       if (u.children.empty()) {
                           throw ValidationError(path + ": union needs at least one child");
                       }
                       for (std::size_t i = 0; i < u.children.size(); ++i) {
                           const std::string child_path = path + "/children/" + std::to_string(i);
                           if (!u.children[i]) {
                               throw ValidationError(child_path + ": missing node");
                           }
                           validate_at(*u.children[i], depth + 1, child_path);
                       }
                   },
                   [&](const SdfTranslate& t) {
                       if (!t.child) {
                           throw ValidationError(path + "/child: missing node");
                       }
                       if (!finite(t.offset)) {
                           throw ValidationError(path + ": translate offset must be finite");
                       }
                       validate_at(*t.child, depth + 1, path + "/child");
                   },
                   [&](const SdfScale& s) {
                       if (!s.child) {
                           throw ValidationError(path + "/child: missing node");
                       }
                       if (!(s.factor > 0.0) || !std::isfinite(s.factor)) {
                           throw ValidationError(path + ": scale factor must be positive and finite");
                       }
                       validate_at(*s.child, depth + 1, path + "/child");
                   },
               },
               node.shape);
}

}  // namespace

bool operator==(const SdfNode& a, const SdfNode& b) {
    if (a.shape.index() != b.shape.index()) {
        return false;
    }
    auto same_child = [](const SdfPtr& l, const SdfPtr& r) {
        if (!l || !r) {
            return l == r;
        }
        return *l == *r;
    };
    return std::visit(
        Overloaded{
            [&](const SdfSphere& s) {
                const auto& o = std::get<SdfSphere>(b.shape);
                return s.center == o.center && s.radius == o.radius;
            },
            [&](const SdfBox& s) {
                const auto& o = std::get<SdfBox>(b.shape);
                return s.center == o.center && s.half_extents == o.half_extents;
            },
            [&](const SdfCapsule& s) {
                const auto& o = std::get<SdfCapsule>(b.shape);
                return s.p0 == o.p0 && s.p1 == o.p1 && s.radius == o.radius;
            },
            [&](const SdfUnion& s) {
                const auto& o = std::get<SdfUnion>(b.shape);
                return std::equal(s.children.begin(), s.children.end(), o.children.begin(), o.children.end(),
                                  same_child);
            },
            [&](const SdfTranslate& s) {
                const auto& o = std::get<SdfTranslate>(b.shape);
                return s.offset == o.offset && same_child(s.child, o.child);
            },
            [&](const SdfScale& s) {
                const auto& o = std::get<SdfScale>(b.shape);
                return s.factor == o.factor && same_child(s.child, o.child);
            },
        },
        a.shape);
}

SdfPtr make_sphere(Vec3 center, double radius) {
    return std::make_shared<const SdfNode>(SdfNode{SdfSphere{center, radius}});
}
SdfPtr make_box(Vec3 center, Vec3 half_extents) {
    return std::make_shared<const SdfNode>(SdfNode{SdfBox{center, half_extents}});
}
SdfPtr make_capsule(Vec3 p0, Vec3 p1, double radius) {
    return std::make_shared<const SdfNode>(SdfNode{SdfCapsule{p0, p1, radius}});
}
SdfPtr make_union(std::vector<SdfPtr> children) {
    return std::make_shared<const SdfNode>(SdfNode{SdfUnion{std::move(children)}});
}
SdfPtr make_translate(SdfPtr child, Vec3 offset) {
    return std::make_shared<const SdfNode>(SdfNode{SdfTranslate{std::move(child), offset}});
}
SdfPtr make_scale(SdfPtr child, double factor) {
    return std::make_shared<const SdfNode>(SdfNode{SdfScale{std::move(child), factor}});
}

double eval_sdf(const SdfNode& node, const Vec3& p) {
    return std::visit(
        Overloaded{
            [&](const SdfSphere& s) { return length(p - s.center) - s.radius; },
            [&](const SdfBox& b) {
                const Vec3 q = abs(p - b.center) - b.half_extents;
                const double outside = length(max(q, Vec3{}));
                const double inside = std::fmin(std::fmax(q.x, std::fmax(q.y, q.z)), 0.0);
                return outside + inside;
            },
            [&](const SdfCapsule& c) {
                const Vec3 pa = p - c.p0;
                const Vec3 ba = c.p1 - c.p0;
                const double bb = dot(ba, ba);
                const double h = bb > 0.0 ? std::clamp(dot(pa, ba) / bb, 0.0, 1.0) : 0.0;
                return length(pa - ba * h) - c.radius;
            },
            [&](const SdfUnion& u) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& child : u.children) {
                    d = std::fmin(d, eval_sdf(*child, p));
                }
                return d;
            },
            [&](const SdfTranslate& t) { return eval_sdf(*t.child, p - t.offset); },
            [&](const SdfScale& s) { return s.factor * eval_sdf(*s.child, p / s.factor); },
        },
        node.shape);
}

Aabb sdf_bounds(const SdfNode& node) {
    return std::visit(
        Overloaded{
            [](const SdfSphere& s) {
                const Vec3 r{s.radius, s.radius, s.radius};
                return Aabb{s.center - r, s.center + r};
            },
            [](const SdfBox& b) { return Aabb{b.center - b.half_extents, b.center + b.half_extents}; },
            [](const SdfCapsule& c) {
                const Vec3 r{c.radius, c.radius, c.radius};
                const Vec3 lo{std::fmin(c.p0.x, c.p1.x), std::fmin(c.p0.y, c.p1.y), std::fmin(c.p0.z, c.p1.z)};
                const Vec3 hi{std::fmax(c.p0.x, c.p1.x), std::fmax(c.p0.y, c.p1.y), std::fmax(c.p0.z, c.p1.z)};
                return Aabb{lo - r, hi + r};
            },
            [](const SdfUnion& u) {
                Aabb box = sdf_bounds(*u.children.front());
                for (std::size_t i = 1; i < u.children.size(); ++i) {
                    const Aabb c = sdf_bounds(*u.children[i]);
                    box.min = {std::fmin(box.min.x, c.min.x), std::fmin(box.min.y, c.min.y),
                               std::fmin(box.min.z, c.min.z)};
                    box.max = {std::fmax(box.max.x, c.max.x), std::fmax(box.max.y, c.max.y),
                               std::fmax(box.max.z, c.max.z)};
                }
                return box;
            },
            [](const SdfTranslate& t) {
                const Aabb c = sdf_bounds(*t.child);
                return Aabb{c.min + t.offset, c.max + t.offset};
            },
            [](const SdfScale& s) {
                const Aabb c = sdf_bounds(*s.child);
                return Aabb{c.min * s.factor, c.max * s.factor};
            },
        },
        node.shape);
}

int sdf_depth(const SdfNode& node) {
    return std::visit(Overloaded{
                          [](const SdfUnion& u) {
                              int d = 0;
                              for (const auto& child : u.children) {
                                  d = std::max(d, child ? sdf_depth(*child) : 0);
                              }
                              return d + 1;
                          },
                          [](const SdfTranslate& t) { return (t.child ? sdf_depth(*t.child) : 0) + 1; },
                          [](const SdfScale& s) { return (s.child ? sdf_depth(*s.child) : 0) + 1; },
                          [](const auto&) { return 1; },
                      },
                      node.shape);
}

void validate_sdf(const SdfNode& node) { validate_at(node, 1, "geometry"); }

}  // namespace diglab
