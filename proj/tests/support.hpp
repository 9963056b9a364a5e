#pragma once

// Shared helpers for the test binaries: random generators for valid inputs
// and scratch directories.

#include "gsscene/gsscene.hpp"

#include <filesystem>
#include <string>

namespace gstest {

using namespace gsscene;

inline Quaternion random_quat(Rng& rng) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    return q.normalized();
}

inline Vec3 random_vec(Rng& rng, double lo, double hi) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline GaussianCloud random_cloud(Rng& rng, std::size_t n, double spread = 1.0, double smin = 0.01,
                                  double smax = 0.1) {
    GaussianCloud c;
    c.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back(random_vec(rng, -spread, spread), random_vec(rng, smin, smax), random_quat(rng),
                    random_vec(rng, 0.0, 1.0), rng.uniform(0.05, 1.0));
    }
    return c;
}

inline std::vector<Vec3> random_points(Rng& rng, std::size_t n, const Vec3& center, double half) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(center + random_vec(rng, -half, half));
    return pts;
}

/// One-object guide with the given id and extents.
inline ObjectSpec make_object(const std::string& id, const Vec3& xyz, const Vec3& whl, bool pervasive = false) {
    ObjectSpec o;
    o.id = id;
    o.cls = "thing";
    o.prompt = "a " + id;
    o.init.method = InitMethod::SphereSurface;
    o.init.count = 50;
    o.transform.xyz = xyz;
    o.transform.whl = whl;
    o.pervasive = pervasive;
    return o;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("gsscene_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path data_dir() { return std::filesystem::path(GSSCENE_TEST_DATA); }

inline double max_abs_diff(const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Quaternions q and -q are the same rotation.
inline double quat_distance(const Quaternion& a, const Quaternion& b) {
    const double plus = std::abs(a.w - b.w) + std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z);
    const double minus = std::abs(a.w + b.w) + std::abs(a.x + b.x) + std::abs(a.y + b.y) + std::abs(a.z + b.z);
    return std::min(plus, minus);
}

} // namespace gstest
