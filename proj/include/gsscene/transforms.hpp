#pragma once

// Local <-> scene frame mapping for Gaussian objects.
//
//   p' = R (( p - mu ) * stretch) + xyz
//   s' = s * stretch
//   q' = quad (x) q
//
// mu is the cloud centroid, R the rotation of quad. Stretching happens about
// mu so that it never translates the object. Color and opacity pass through.

#include "gsscene/gaussians.hpp"
#include "gsscene/guide.hpp"
#include "gsscene/quaternion.hpp"

namespace gsscene {

inline void check_stretch(const Vec3& stretch) {
    if (!stretch.allFinite() || !(stretch.array() > 0.0).all()) {
        throw PreconditionError("stretch factors must be positive and finite");
    }
}

/// Maps `cloud` (local frame, centroid `mu`) into the scene frame.
inline GaussianCloud compose_to_global(const GaussianCloud& cloud, const ObjectTransform& t,
                                       const Vec3& stretch, const Vec3& mu) {
    if (cloud.empty()) throw EmptyCloud("cannot compose an empty cloud");
    check_stretch(stretch);
    const Mat3 r = quat_to_matrix(t.quad);
    GaussianCloud out = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out.p[i] = r * (cloud.p[i] - mu).cwiseProduct(stretch) + t.xyz;
        out.s[i] = cloud.s[i].cwiseProduct(stretch);
        out.q[i] = quat_mul(t.quad, cloud.q[i]);
    }
    return out;
}

inline GaussianCloud compose_to_global(const GaussianCloud& cloud, const ObjectTransform& t,
                                       const Vec3& stretch) {
    if (cloud.empty()) throw EmptyCloud("cannot compose an empty cloud");
    return compose_to_global(cloud, t, stretch, centroid(cloud));
}

/// Inverse of compose_to_global for the same `t`, `stretch` and `mu`.
inline GaussianCloud restore_to_local(const GaussianCloud& cloud, const ObjectTransform& t,
                                      const Vec3& stretch, const Vec3& mu) {
    if (cloud.empty()) throw EmptyCloud("cannot restore an empty cloud");
    check_stretch(stretch);
    const Mat3 rt = quat_to_matrix(t.quad).transpose();
    const Quaternion inv = t.quad.normalized().conjugate();
    GaussianCloud out = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out.p[i] = (rt * (cloud.p[i] - t.xyz)).cwiseQuotient(stretch) + mu;
        out.s[i] = cloud.s[i].cwiseQuotient(stretch);
        out.q[i] = quat_mul(inv, cloud.q[i]);
    }
    return out;
}

} // namespace gsscene
