#pragma once

// Scene-level composition: every object cloud mapped into the shared frame.

#include "gsscene/gaussians.hpp"
#include "gsscene/schedule.hpp"
#include "gsscene/transforms.hpp"

#include <map>
#include <string>

namespace gsscene {

/// Per-object stretch overrides; objects without an entry use full stretch.
using StretchMap = std::map<std::string, Vec3>;

/// Stretch that maps the cloud's native extent onto `whl` (the end of the
/// progressive ramp, 1 + beta).
inline Vec3 full_stretch(const GaussianCloud& cloud, const Vec3& whl) {
    return Vec3::Ones() + derive_beta(cloud, whl);
}

inline Vec3 object_stretch(const GaussianScene& scene, const ObjectSpec& obj, const StretchMap* stretches) {
    if (stretches) {
        if (auto it = stretches->find(obj.id); it != stretches->end()) return it->second;
    }
    return full_stretch(scene.cloud(obj.id), obj.transform.whl);
}

inline GaussianCloud compose_object(const GaussianScene& scene, const ObjectSpec& obj,
                                    const StretchMap* stretches = nullptr) {
    const GaussianCloud& local = scene.cloud(obj.id);
    return compose_to_global(local, obj.transform, object_stretch(scene, obj, stretches));
}

/// All objects in guide order, composed into the scene frame.
inline std::map<std::string, GaussianCloud> compose_scene(const GaussianScene& scene,
                                                          const StretchMap* stretches = nullptr) {
    check_scene(scene);
    std::map<std::string, GaussianCloud> out;
    for (const auto& obj : scene.guide.objects) out.emplace(obj.id, compose_object(scene, obj, stretches));
    return out;
}

/// Concatenation of every composed object, in guide order.
inline GaussianCloud merge_composed(const GaussianScene& scene, const std::map<std::string, GaussianCloud>& composed) {
    GaussianCloud all;
    for (const auto& obj : scene.guide.objects) {
        const GaussianCloud& c = composed.at(obj.id);
        for (std::size_t i = 0; i < c.size(); ++i) all.push_back_from(c, i);
    }
    return all;
}

} // namespace gsscene
