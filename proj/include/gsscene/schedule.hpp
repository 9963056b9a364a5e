#pragma once

// Progressive scale control. Each object ramps from its native extent to the
// guide extent:
//
//   f(k) = 1 + beta * clamp((k - w) / gamma, 0, 1),   beta = whl / e - 1
//
// where e is the object extent (see gaussians.hpp) and the stretch is taken
// about the object centroid.

#include "gsscene/gaussians.hpp"

#include <algorithm>
#include <cstdint>

namespace gsscene {

struct ScaleSchedule {
    std::int64_t warmup = 500;      // w
    std::int64_t saturation = 1000; // gamma
    Vec3 beta = Vec3::Zero();

    bool valid() const noexcept {
        return warmup >= 0 && saturation >= 1 && beta.allFinite() && (beta.array() > -1.0).all();
    }
};

inline Vec3 derive_beta(const Vec3& native_extent, const Vec3& whl) {
    if (!(whl.array() > 0.0).all()) throw PreconditionError("whl must be positive");
    return whl.cwiseQuotient(native_extent) - Vec3::Ones();
}

inline Vec3 derive_beta(const GaussianCloud& cloud, const Vec3& whl) {
    return derive_beta(extent(cloud).size, whl);
}

/// Ramp progress in [0, 1] at step k.
inline double ramp(std::int64_t k, std::int64_t warmup, std::int64_t saturation) {
    const double t = static_cast<double>(k - warmup) / static_cast<double>(saturation);
    return std::clamp(t, 0.0, 1.0);
}

inline Vec3 stretch_factor(std::int64_t k, const ScaleSchedule& sched) {
    return Vec3::Ones() + sched.beta * ramp(k, sched.warmup, sched.saturation);
}

/// p -> mu + (p - mu) * f, s -> s * f about the centroid mu. Axes with
/// f = 1 are copied untouched.
inline GaussianCloud apply_stretch(const GaussianCloud& cloud, const Vec3& f) {
    if (cloud.empty()) throw EmptyCloud("cannot stretch an empty cloud");
    if (!f.allFinite() || !(f.array() > 0.0).all()) throw PreconditionError("stretch must be positive");
    const Vec3 mu = centroid(cloud);
    GaussianCloud out = cloud;
    for (int a = 0; a < 3; ++a) {
        if (f[a] == 1.0) continue;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            out.p[i][a] = mu[a] + (cloud.p[i][a] - mu[a]) * f[a];
            out.s[i][a] = cloud.s[i][a] * f[a];
        }
    }
    return out;
}

} // namespace gsscene
