#pragma once

// Collision penalty between two objects' Gaussian centers:
//
//   L = sum over pairs (a, b) with d = |a - b| < theta of (theta - d)^2
//
// Gradients are taken with respect to a rigid translation of each object.

#include "gsscene/kdtree.hpp"
#include "gsscene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gsscene {

struct CollisionReport {
    std::string id_a;
    std::string id_b;
    double loss = 0.0;
    std::size_t pair_count = 0;
    Vec3 grad_xyz_a = Vec3::Zero();
    Vec3 grad_xyz_b = Vec3::Zero();
};

/// Pairs closer than this fraction of theta use a fixed +x direction.
inline constexpr double kCoincidentFraction = 1e-8;

/// Loss contribution and dL/da of one point pair. Shared by the indexed
/// evaluation and exposed so the d -> 0 rule has one definition.
struct PairTerm {
    double loss;
    Vec3 grad_a;
};

inline PairTerm collision_pair_term(const Vec3& a, const Vec3& b, double theta, double d) {
    const double gap = theta - d;
    if (d < kCoincidentFraction * theta) return {gap * gap, Vec3(-2.0 * theta, 0.0, 0.0)};
    return {gap * gap, (-2.0 * gap / d) * (a - b)};
}

namespace detail {

inline void check_points(std::span<const Vec3> pts, const char* what) {
    for (const auto& p : pts) {
        if (!p.allFinite()) throw NonFiniteInput(std::string(what) + " contains a non-finite point");
    }
}

} // namespace detail

/// Evaluates the penalty using a prebuilt index over `b`.
inline CollisionReport collision_loss(std::span<const Vec3> a, const SpatialIndex& b_index, double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw NonPositiveThreshold("collision threshold must be positive");
    detail::check_points(a, "first point set");
    const auto b = b_index.points();

    CollisionReport report;
    std::vector<double> terms;
    std::vector<std::uint32_t> hits;
    for (std::size_t i = 0; i < a.size(); ++i) {
        b_index.radius_query(a[i], theta, hits);
        for (std::uint32_t j : hits) {
            const double d = (a[i] - b[j]).norm();
            if (!(d < theta)) continue;
            const PairTerm t = collision_pair_term(a[i], b[j], theta, d);
            terms.push_back(t.loss);
            report.grad_xyz_a += t.grad_a;
        }
    }
    // Summing in sorted order makes the loss independent of argument order.
    std::sort(terms.begin(), terms.end());
    for (double t : terms) report.loss += t;
    report.pair_count = terms.size();
    report.grad_xyz_b = -report.grad_xyz_a;
    return report;
}

inline CollisionReport collision_loss(std::span<const Vec3> a, std::span<const Vec3> b, double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw NonPositiveThreshold("collision threshold must be positive");
    return collision_loss(a, build_index(b), theta);
}

/// One report per unordered pair of non-pervasive objects, sorted by
/// (id_a, id_b) with id_a < id_b. Zero-loss pairs are included.
inline std::vector<CollisionReport> scene_collision(const std::map<std::string, GaussianCloud>& composed,
                                                    const SceneGuide& guide, double theta) {
    std::vector<const ObjectSpec*> solid;
    for (const auto& o : guide.objects) {
        if (!o.pervasive) solid.push_back(&o);
    }
    std::sort(solid.begin(), solid.end(), [](const ObjectSpec* x, const ObjectSpec* y) { return x->id < y->id; });

    std::map<std::string, SpatialIndex> indices;
    for (const ObjectSpec* o : solid) indices.emplace(o->id, build_index(composed.at(o->id).p));

    std::vector<CollisionReport> out;
    for (std::size_t i = 0; i < solid.size(); ++i) {
        for (std::size_t j = i + 1; j < solid.size(); ++j) {
            CollisionReport r = collision_loss(composed.at(solid[i]->id).p, indices.at(solid[j]->id), theta);
            r.id_a = solid[i]->id;
            r.id_b = solid[j]->id;
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline std::vector<CollisionReport> scene_collision(const GaussianScene& scene, double theta,
                                                    const StretchMap* stretches = nullptr) {
    return scene_collision(compose_scene(scene, stretches), scene.guide, theta);
}

inline std::vector<CollisionReport> scene_collision(const GaussianScene& scene) {
    return scene_collision(scene, scene.guide.collision_threshold);
}

inline double total_collision_loss(const std::vector<CollisionReport>& reports) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.loss;
    return sum;
}

inline nlohmann::json to_json(const CollisionReport& r) {
    return {{"pair", {r.id_a, r.id_b}},
            {"loss", r.loss},
            {"pair_count", r.pair_count},
            {"grad_xyz_a", {r.grad_xyz_a.x(), r.grad_xyz_a.y(), r.grad_xyz_a.z()}},
            {"grad_xyz_b", {r.grad_xyz_b.x(), r.grad_xyz_b.y(), r.grad_xyz_b.z()}}};
}

inline nlohmann::json to_json(const std::vector<CollisionReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return arr;
}

} // namespace gsscene
