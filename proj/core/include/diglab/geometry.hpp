#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>

namespace diglab {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double px, double py, double pz) : x(px), y(py), z(pz) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 abs(const Vec3& v) { return {std::fabs(v.x), std::fabs(v.y), std::fabs(v.z)}; }
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}
inline Vec3 normalized(const Vec3& v) {
    const double len = length(v);
    return len > 0.0 ? v / len : Vec3{};
}

/// Integer cell / chunk coordinate. Ordered lexicographically (x, then y, then z).
struct Int3 {
    int x = 0;
    int y = 0;
    int z = 0;

    friend constexpr bool operator==(const Int3&, const Int3&) = default;
    friend constexpr auto operator<=>(const Int3&, const Int3&) = default;
    constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

/// Unit quaternion (w, x, y, z).
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr bool operator==(const Quat&, const Quat&) = default;

    static Quat identity() { return {}; }
    static Quat from_axis_angle(const Vec3& axis, double angle);
    /// Shortest rotation taking +Z onto `dir` (dir need not be normalized).
    static Quat align_z_to(const Vec3& dir);
};

Quat normalized(const Quat& q);

/// Row-major 3x3 rotation.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 from_quat(const Quat& q);
    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Vec3 apply_transposed(const Vec3& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z, m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }
};

/// Rigid transform placing a brush in world space.
struct Pose {
    Vec3 position;
    Quat orientation;

    friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

}  // namespace diglab
