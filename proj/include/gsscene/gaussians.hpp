#pragma once

#include "gsscene/error.hpp"
#include "gsscene/guide.hpp"
#include "gsscene/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace gsscene {

/// Structure-of-arrays Gaussian object: centers, per-axis standard
/// deviations (linear, not log), rotations, RGB and opacity.
struct GaussianCloud {
    std::vector<Vec3> p;
    std::vector<Vec3> s;
    std::vector<Quaternion> q;
    std::vector<Vec3> c;
    std::vector<double> alpha;

    std::size_t size() const noexcept { return p.size(); }
    bool empty() const noexcept { return p.empty(); }

    void reserve(std::size_t n) {
        p.reserve(n);
        s.reserve(n);
        q.reserve(n);
        c.reserve(n);
        alpha.reserve(n);
    }

    void push_back(const Vec3& center, const Vec3& scale, const Quaternion& rot, const Vec3& color,
                   double opacity) {
        p.push_back(center);
        s.push_back(scale);
        q.push_back(rot);
        c.push_back(color);
        alpha.push_back(opacity);
    }

    /// Appends Gaussian `i` of `other`.
    void push_back_from(const GaussianCloud& other, std::size_t i) {
        push_back(other.p[i], other.s[i], other.q[i], other.c[i], other.alpha[i]);
    }
};

/// Returns a description of the first broken invariant, or an empty string.
inline std::string check_cloud(const GaussianCloud& cloud) {
    const std::size_t n = cloud.p.size();
    if (cloud.s.size() != n || cloud.q.size() != n || cloud.c.size() != n || cloud.alpha.size() != n) {
        return "array lengths differ";
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string at = " at Gaussian " + std::to_string(i);
        if (!cloud.p[i].allFinite()) return "non-finite center" + at;
        if (!cloud.s[i].allFinite() || (cloud.s[i].array() <= 0.0).any()) {
            return "non-positive or non-finite scale" + at;
        }
        if (!cloud.q[i].is_unit()) return "non-unit rotation" + at;
        if (!(cloud.alpha[i] >= 0.0 && cloud.alpha[i] <= 1.0)) return "opacity outside [0,1]" + at;
        if (!((cloud.c[i].array() >= 0.0).all() && (cloud.c[i].array() <= 1.0).all())) {
            return "color outside [0,1]" + at;
        }
    }
    return {};
}

/// Σ = R diag(s²) Rᵀ.
inline Mat3 covariance(const Vec3& scale, const Quaternion& rot) {
    const Mat3 r = quat_to_matrix(rot);
    const Vec3 var = scale.cwiseProduct(scale);
    return r * var.asDiagonal() * r.transpose();
}

/// Object size floor per axis.
inline constexpr double kExtentFloor = 1e-6;
/// Each Gaussian contributes the bounding box of its 3-sigma ellipsoid.
inline constexpr double kExtentSigmas = 3.0;

struct Extent {
    Vec3 centroid;
    Vec3 size;
};

inline Vec3 centroid(const GaussianCloud& cloud) {
    if (cloud.empty()) throw EmptyCloud("centroid of an empty cloud");
    Vec3 sum = Vec3::Zero();
    for (const auto& p : cloud.p) sum += p;
    return sum / static_cast<double>(cloud.size());
}

/// Half-widths of the axis-aligned box around one Gaussian's 3-sigma
/// ellipsoid: 3·sqrt(Σ_aa) per axis. Equals 3·s for unrotated Gaussians and
/// never exceeds 3·max(s).
inline Vec3 sigma_box(const Vec3& scale, const Quaternion& rot) {
    return kExtentSigmas * covariance(scale, rot).diagonal().cwiseSqrt();
}

/// Bounding box of every Gaussian's 3-sigma ellipsoid, floored at
/// kExtentFloor per axis.
inline Extent extent(const GaussianCloud& cloud) {
    if (cloud.empty()) throw EmptyCloud("extent of an empty cloud");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 pad = sigma_box(cloud.s[i], cloud.q[i]);
        lo = lo.cwiseMin(cloud.p[i] - pad);
        hi = hi.cwiseMax(cloud.p[i] + pad);
    }
    return {centroid(cloud), (hi - lo).cwiseMax(Vec3::Constant(kExtentFloor))};
}

/// A guide together with one local-frame cloud per object (keys = object ids).
struct GaussianScene {
    SceneGuide guide;
    std::map<std::string, GaussianCloud> clouds;

    const GaussianCloud& cloud(const std::string& id) const {
        auto it = clouds.find(id);
        if (it == clouds.end()) throw UnknownObject("no cloud for object '" + id + "'");
        return it->second;
    }
    GaussianCloud& cloud(const std::string& id) {
        auto it = clouds.find(id);
        if (it == clouds.end()) throw UnknownObject("no cloud for object '" + id + "'");
        return it->second;
    }
};

/// Throws InvariantViolation unless cloud keys match guide ids exactly.
inline void check_scene(const GaussianScene& scene) {
    if (scene.clouds.size() != scene.guide.objects.size()) {
        throw InvariantViolation("scene has " + std::to_string(scene.clouds.size()) + " clouds for " +
                                 std::to_string(scene.guide.objects.size()) + " guide objects");
    }
    for (const auto& obj : scene.guide.objects) {
        if (!scene.clouds.contains(obj.id)) {
            throw InvariantViolation("object '" + obj.id + "' has no cloud");
        }
    }
}

} // namespace gsscene
