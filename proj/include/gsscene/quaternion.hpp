#pragma once

#include "gsscene/error.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <string>

namespace gsscene {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance on |‖q‖ − 1| for a quaternion to be used as a rotation.
inline constexpr double kUnitTolerance = 1e-6;

/// Scalar-first quaternion (w, x, y, z), Hamilton convention.
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quaternion identity() noexcept { return {1.0, 0.0, 0.0, 0.0}; }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    static Quaternion from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 n = axis.normalized();
        const double h = 0.5 * angle;
        const double s = std::sin(h);
        return {std::cos(h), s * n.x(), s * n.y(), s * n.z()};
    }

    /// Exponential map of a rotation vector; exact for any magnitude and
    /// well-behaved as ‖v‖ → 0.
    static Quaternion from_rotation_vector(const Vec3& v) {
        const double angle = v.norm();
        if (angle < 1e-12) {
            return Quaternion{1.0, 0.5 * v.x(), 0.5 * v.y(), 0.5 * v.z()}.normalized();
        }
        return from_axis_angle(v / angle, angle);
    }

    static Quaternion from_array(const std::array<double, 4>& a) noexcept {
        return {a[0], a[1], a[2], a[3]};
    }
    std::array<double, 4> to_array() const noexcept { return {w, x, y, z}; }

    double norm() const noexcept { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quaternion normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    Quaternion conjugate() const noexcept { return {w, -x, -y, -z}; }

    bool is_unit(double tol = kUnitTolerance) const noexcept {
        return std::abs(norm() - 1.0) <= tol;
    }

    friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

/// Raw Hamilton product, no renormalization.
constexpr Quaternion hamilton(const Quaternion& a, const Quaternion& b) noexcept {
    return {
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    };
}

/// Composition a ⊗ b (apply b, then a), renormalized to unit length.
inline Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
    return hamilton(a, b).normalized();
}

/// Rotation matrix of a unit quaternion. Throws NonUnitQuaternion when the
/// norm deviates from 1 by more than `tol`; accepted inputs are renormalized
/// first so the result is orthonormal to rounding.
inline Mat3 quat_to_matrix(const Quaternion& q, double tol = kUnitTolerance) {
    if (!q.is_unit(tol)) {
        throw NonUnitQuaternion("quaternion norm " + std::to_string(q.norm()) +
                                " is not within tolerance of 1");
    }
    const Quaternion u = q.normalized();
    const double w = u.w, x = u.x, y = u.y, z = u.z;
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

inline Vec3 rotate(const Quaternion& q, const Vec3& v) { return quat_to_matrix(q) * v; }

/// Unit quaternion of a proper rotation matrix (Shepperd), w >= 0.
inline Quaternion matrix_to_quat(const Mat3& r) {
    const double tr = r.trace();
    Quaternion q;
    if (tr > 0.0) {
        const double s = 2.0 * std::sqrt(1.0 + tr);
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
    return q.normalized();
}

} // namespace gsscene
