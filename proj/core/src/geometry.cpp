#include "diglab/geometry.hpp"

namespace diglab {

Quat normalized(const Quat& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (!(n > 0.0)) {
        return Quat::identity();
    }
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = diglab::normalized(axis);
    const double s = std::sin(angle * 0.5);
    return {std::cos(angle * 0.5), a.x * s, a.y * s, a.z * s};
}

Quat Quat::align_z_to(const Vec3& dir) {
    const Vec3 d = diglab::normalized(dir);
    const Vec3 z{0.0, 0.0, 1.0};
    const double c = dot(z, d);
    if (c > 1.0 - 1e-12) {
        return identity();
    }
    if (c < -1.0 + 1e-12) {
        return {0.0, 1.0, 0.0, 0.0};
    }
    const Vec3 axis = cross(z, d);
    return diglab::normalized(Quat{1.0 + c, axis.x, axis.y, axis.z});
}

Mat3 Mat3::from_quat(const Quat& raw) {
    const Quat q = normalized(raw);
    const double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    Mat3 r;
    r.m = {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz),       2.0 * (xz + wy),
           2.0 * (xy + wz),       1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
           2.0 * (xz - wy),       2.0 * (yz + wx),       1.0 - 2.0 * (xx + yy)};
    return r;
}

}  // namespace diglab
