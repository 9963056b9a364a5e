#pragma once

// Initialization and adaptive density control.
//
// Pervasive objects (rain, snow, petals) start from a few uniformly placed
// "condensation nuclei", densify on a longer interval (nu / tau steps instead
// of nu) and lose any Gaussian whose largest scale exceeds rho.

#include "gsscene/error.hpp"
#include "gsscene/gaussians.hpp"
#include "gsscene/guide.hpp"
#include "gsscene/random.hpp"

#include <cmath>
#include <cstdint>
#include <span>

namespace gsscene {

struct DensifyConfig {
    std::int64_t interval = 100;  // nu
    double tau = 0.25;            // frequency factor for pervasive objects
    double rho = 0.1;             // scale pruning threshold
    double alpha_min = 0.01;
    double grad_threshold = 2e-4;

    bool valid() const noexcept {
        return interval >= 1 && tau > 0.0 && tau <= 1.0 && rho > 0.0 && alpha_min >= 0.0 && alpha_min < 1.0 &&
               grad_threshold >= 0.0;
    }
};

inline void check_config(const DensifyConfig& cfg) {
    if (!cfg.valid()) throw PreconditionError("invalid densification config");
}

/// Opacity of freshly sampled nuclei.
inline constexpr double kNucleusOpacity = 0.1;
/// Nucleus standard deviation as a fraction of the smallest box side.
inline constexpr double kNucleusScaleFraction = 0.01;

/// `spec.count` Gaussians uniform in the box [-whl/2, whl/2].
inline GaussianCloud sparse_init(const InitSpec& spec, const Vec3& whl, std::uint64_t seed) {
    if (spec.count < 1) throw PreconditionError("init count must be at least 1");
    if (!(whl.array() > 0.0).all()) throw PreconditionError("whl must be positive");
    Rng rng(seed);
    const double sigma = kNucleusScaleFraction * whl.minCoeff();
    GaussianCloud cloud;
    cloud.reserve(static_cast<std::size_t>(spec.count));
    for (long long i = 0; i < spec.count; ++i) {
        Vec3 p;
        for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-0.5 * whl[a], 0.5 * whl[a]);
        cloud.push_back(p, Vec3::Constant(sigma), Quaternion::identity(), spec.base_color, kNucleusOpacity);
    }
    return cloud;
}

/// Surface samples of a unit-diameter sphere centered at the origin; the
/// object reaches its guide extent through progressive scale control.
inline constexpr double kSurfaceRadius = 0.5;
inline constexpr double kSurfaceScale = 0.03;
inline constexpr double kSurfaceOpacity = 0.8;

inline GaussianCloud sphere_surface_init(const InitSpec& spec, std::uint64_t seed) {
    if (spec.count < 1) throw PreconditionError("init count must be at least 1");
    Rng rng(seed);
    GaussianCloud cloud;
    cloud.reserve(static_cast<std::size_t>(spec.count));
    for (long long i = 0; i < spec.count; ++i) {
        Vec3 n(rng.normal(), rng.normal(), rng.normal());
        while (n.norm() < 1e-12) n = Vec3(rng.normal(), rng.normal(), rng.normal());
        cloud.push_back(kSurfaceRadius * n.normalized(), Vec3::Constant(kSurfaceScale), Quaternion::identity(),
                        spec.base_color, kSurfaceOpacity);
    }
    return cloud;
}

inline std::int64_t densify_interval(const DensifyConfig& cfg, bool pervasive) {
    if (!pervasive) return cfg.interval;
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(cfg.interval) / cfg.tau));
}

/// True on positive multiples of the effective interval.
inline bool should_densify(std::int64_t step, const DensifyConfig& cfg, bool pervasive) {
    if (step <= 0) return false;
    return step % densify_interval(cfg, pervasive) == 0;
}

inline constexpr double kCloneJitter = 0.01;
inline constexpr double kSplitShrink = 1.6;

/// Clones (small) or splits (max scale > rho/2) every Gaussian whose
/// gradient magnitude exceeds the threshold. Untouched and cloned parents keep
/// their order; new Gaussians are appended.
inline GaussianCloud densify_step(const GaussianCloud& cloud, std::span<const double> grad_mags,
                                  const DensifyConfig& cfg, Rng& rng) {
    check_config(cfg);
    if (grad_mags.size() != cloud.size()) {
        throw LengthMismatch("grad_mags has " + std::to_string(grad_mags.size()) + " entries for " +
                             std::to_string(cloud.size()) + " Gaussians");
    }
    GaussianCloud kept;
    GaussianCloud added;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!(grad_mags[i] >= 0.0)) throw PreconditionError("gradient magnitudes must be non-negative");
        if (grad_mags[i] <= cfg.grad_threshold) {
            kept.push_back_from(cloud, i);
            continue;
        }
        const Vec3& s = cloud.s[i];
        if (s.maxCoeff() > 0.5 * cfg.rho) {
            const Mat3 r = quat_to_matrix(cloud.q[i]);
            for (int child = 0; child < 2; ++child) {
                const Vec3 n(rng.normal(), rng.normal(), rng.normal());
                added.push_back(cloud.p[i] + r * s.cwiseProduct(n), s / kSplitShrink, cloud.q[i], cloud.c[i],
                                cloud.alpha[i]);
            }
        } else {
            kept.push_back_from(cloud, i);
            const Vec3 n(rng.normal(), rng.normal(), rng.normal());
            added.push_back(cloud.p[i] + kCloneJitter * s.cwiseProduct(n), s, cloud.q[i], cloud.c[i],
                            cloud.alpha[i]);
        }
    }
    for (std::size_t i = 0; i < added.size(); ++i) kept.push_back_from(added, i);
    return kept;
}

/// Drops Gaussians with alpha < alpha_min and, for pervasive objects, any
/// whose largest scale exceeds rho. Survivor order is preserved.
inline GaussianCloud prune(const GaussianCloud& cloud, const DensifyConfig& cfg, bool pervasive) {
    GaussianCloud out;
    out.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.alpha[i] < cfg.alpha_min) continue;
        if (pervasive && cloud.s[i].maxCoeff() > cfg.rho) continue;
        out.push_back_from(cloud, i);
    }
    return out;
}

/// Default rho: a tenth of the smallest extent component in the scene.
inline double default_rho(const SceneGuide& guide) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& o : guide.objects) m = std::min(m, o.transform.whl.minCoeff());
    return std::isfinite(m) ? 0.1 * m : 0.1;
}

} // namespace gsscene
