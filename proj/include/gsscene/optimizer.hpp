#pragma once

// Local-global layout optimization over guide parameters.
//
// Local steps advance each object's progressive scale ramp, score a render of
// the stretched object from an orbit camera and run density control. Global
// steps compose the scene and descend
//
//   L = l1 * sum(L_local) + l2 * L_cross + l3 * L_global
//
// with respect to object transforms: analytically for the collision term,
// by central differences for the provider-scored global term.

#include "gsscene/collision.hpp"
#include "gsscene/densify.hpp"
#include "gsscene/image_io.hpp"
#include "gsscene/random.hpp"
#include "gsscene/renderer.hpp"
#include "gsscene/scene.hpp"
#include "gsscene/schedule.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gsscene {

/// A camera registered with a provider, identified by `id`.
struct ScoredView {
    std::string id;
    Camera camera;
};

/// Scores a render against a text prompt; lower is better. Stands in for a
/// diffusion-model score. `evaluate` must be deterministic.
class ScoreProvider {
public:
    virtual ~ScoreProvider() = default;

    virtual std::string name() const = 0;

    /// `camera_id` is the id of the view that produced `render`, or empty for
    /// an orbit-sampled camera.
    virtual double evaluate(const RenderOutput& render, std::string_view prompt,
                            std::string_view camera_id = {}) const = 0;

    /// Cameras the provider wants renders from for `scope` (an object id, or
    /// "scene"). Empty means any camera will do.
    virtual std::vector<ScoredView> views(std::string_view /*scope*/) const { return {}; }

    /// True when evaluate ignores its inputs; lets callers skip rendering.
    virtual bool is_constant() const { return false; }

    /// True when only the cameras returned by `views` can be scored. A scope
    /// without views is then left unscored.
    virtual bool needs_views() const { return false; }
};

class NullProvider final : public ScoreProvider {
public:
    std::string name() const override { return "null"; }
    double evaluate(const RenderOutput&, std::string_view, std::string_view) const override { return 0.0; }
    bool is_constant() const override { return true; }
};

/// Mean squared RGB error against target images registered per camera.
class PhotometricProvider final : public ScoreProvider {
public:
    struct Target {
        std::string scope;
        Camera camera;
        RgbImage image;
    };

    std::string name() const override { return "photometric"; }

    void add_target(std::string camera_id, std::string scope, const Camera& camera, RgbImage image) {
        if (image.width != camera.width || image.height != camera.height) {
            throw PreconditionError("target image size does not match camera '" + camera_id + "'");
        }
        targets_[std::move(camera_id)] = Target{std::move(scope), camera, std::move(image)};
    }

    /// Registers a target taken straight from a render (values not quantized).
    void add_target(std::string camera_id, std::string scope, const Camera& camera, const RenderOutput& render) {
        add_target(std::move(camera_id), std::move(scope), camera, RgbImage{render.width, render.height, render.rgb});
    }

    double evaluate(const RenderOutput& render, std::string_view, std::string_view camera_id) const override {
        auto it = targets_.find(std::string(camera_id));
        if (it == targets_.end()) throw PreconditionError("no target registered for camera '" + std::string(camera_id) + "'");
        const RgbImage& t = it->second.image;
        if (t.width != render.width || t.height != render.height) throw PreconditionError("render size mismatch");
        double sum = 0.0;
        for (std::size_t i = 0; i < t.rgb.size(); ++i) {
            const double d = render.rgb[i] - t.rgb[i];
            sum += d * d;
        }
        return t.rgb.empty() ? 0.0 : sum / static_cast<double>(t.rgb.size());
    }

    std::vector<ScoredView> views(std::string_view scope) const override {
        std::vector<ScoredView> out;
        for (const auto& [id, t] : targets_) {
            if (t.scope == scope) out.push_back({id, t.camera});
        }
        return out;
    }

    bool needs_views() const override { return true; }

    std::size_t size() const noexcept { return targets_.size(); }

private:
    std::map<std::string, Target> targets_;
};

struct OptimizerConfig {
    std::uint64_t seed = 0;
    ScaleSchedule schedule;                  // beta is per object; only w and gamma are read
    DensifyConfig densify;
    std::optional<double> lr_xyz;            // default 1e-2 * theta
    std::optional<double> lr_whl;            // default 1e-3 * mean whl
    double lr_quad = 1e-3;                   // radians per unit gradient
    bool optimize_quad = false;
    std::optional<std::array<double, 3>> lambda; // default: guide loss weights
    double fd_step = 1e-3;
    int grad_batches = 8;
    int render_width = 64;
    int render_height = 64;
    double fov_y_deg = 50.0;
    Vec3 background = Vec3::Ones();
};

/// Orbit camera sampling for local views.
inline constexpr double kOrbitMinElevationDeg = -10.0;
inline constexpr double kOrbitMaxElevationDeg = 45.0;
inline constexpr double kOrbitRadiusFactor = 1.8;

struct ObjectProgress {
    std::int64_t k = 0;
    /// Native extent captured when the ramp starts; beta = whl / e - 1.
    std::optional<Vec3> ramp_extent;
    double last_local_loss = 0.0;
};

struct TraceRow {
    std::int64_t step = 0;
    double local = 0.0;  // sum of latest local losses
    double cross = 0.0;
    double global = 0.0;
    double total = 0.0;
    bool accepted = true;
};

struct OptState {
    SceneGuide guide;
    std::map<std::string, ObjectProgress> progress;
    std::int64_t global_step = 0;
    std::array<double, 3> lambda{1.0, 10.0, 1.0};
    double lr_xyz = 0.0;
    double lr_whl = 0.0;
    double lr_quad = 0.0;
    Rng rng;
    std::vector<TraceRow> trace;
};

/// `start_step` seeds every object's local step counter; a value of at least
/// warmup + saturation starts the scene fully ramped to its guide extents.
inline OptState init_state(const GaussianScene& scene, const OptimizerConfig& cfg, std::int64_t start_step = 0) {
    if (!validate_guide(scene.guide).empty()) throw InvariantViolation("scene guide is invalid");
    if (start_step < 0) throw PreconditionError("start step must be non-negative");
    OptState st;
    st.guide = scene.guide;
    for (const auto& o : scene.guide.objects) {
        ObjectProgress prog;
        prog.k = start_step;
        if (start_step >= cfg.schedule.warmup) prog.ramp_extent = extent(scene.cloud(o.id)).size;
        st.progress[o.id] = prog;
    }
    st.lambda = cfg.lambda.value_or(scene.guide.loss_weights);
    for (double l : st.lambda) {
        if (!(l >= 0.0)) throw PreconditionError("loss weights must be non-negative");
    }
    double mean_whl = 0.0;
    for (const auto& o : scene.guide.objects) mean_whl += o.transform.whl.mean();
    mean_whl /= static_cast<double>(scene.guide.objects.size());
    st.lr_xyz = cfg.lr_xyz.value_or(1e-2 * scene.guide.collision_threshold);
    st.lr_whl = cfg.lr_whl.value_or(1e-3 * mean_whl);
    st.lr_quad = cfg.lr_quad;
    st.rng = Rng(cfg.seed);
    return st;
}

/// Current ramp stretch of one object. Captures the native extent the first
/// time the ramp is active.
inline Vec3 current_stretch(const GaussianCloud& cloud, const ObjectSpec& obj, ObjectProgress& prog,
                            const OptimizerConfig& cfg) {
    const double r = ramp(prog.k, cfg.schedule.warmup, cfg.schedule.saturation);
    if (prog.k < cfg.schedule.warmup) return Vec3::Ones();
    if (!prog.ramp_extent) prog.ramp_extent = extent(cloud).size;
    const Vec3 beta = derive_beta(*prog.ramp_extent, obj.transform.whl);
    return Vec3::Ones() + beta * r;
}

/// Read-only variant; objects whose ramp has not captured an extent yet use
/// the live extent.
inline Vec3 peek_stretch(const GaussianCloud& cloud, const ObjectSpec& obj, const ObjectProgress& prog,
                         const OptimizerConfig& cfg) {
    ObjectProgress copy = prog;
    return current_stretch(cloud, obj, copy, cfg);
}

inline StretchMap current_stretches(const GaussianScene& scene, const OptState& st, const OptimizerConfig& cfg) {
    StretchMap out;
    for (const auto& o : st.guide.objects) out[o.id] = peek_stretch(scene.cloud(o.id), o, st.progress.at(o.id), cfg);
    return out;
}

inline Camera orbit_camera(const Vec3& target, double radius, Rng& rng, const OptimizerConfig& cfg) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double elevation = rng.uniform(kOrbitMinElevationDeg, kOrbitMaxElevationDeg) * deg;
    const Vec3 dir(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                   std::sin(elevation));
    Camera cam = Camera::look_at(target + radius * dir, target, Vec3::UnitZ(), cfg.fov_y_deg, cfg.render_width,
                                 cfg.render_height);
    cam.near = 1e-3 * radius;
    cam.far = 100.0 * radius;
    return cam;
}

/// Picks a provider view for `scope` or samples an orbit around `target`.
/// Empty when the provider cannot score this scope.
inline std::optional<ScoredView> pick_view(const ScoreProvider& provider, std::string_view scope, const Vec3& target,
                                           double radius, Rng& rng, const OptimizerConfig& cfg) {
    if (provider.is_constant()) return std::nullopt;
    auto views = provider.views(scope);
    if (!views.empty()) return views[rng.below(views.size())];
    if (provider.needs_views()) return std::nullopt;
    return ScoredView{"", orbit_camera(target, radius, rng, cfg)};
}

namespace detail {

/// Per-Gaussian magnitude of the provider-loss gradient w.r.t. centers,
/// estimated by central differences on contiguous batches.
inline std::vector<double> batch_grad_mags(const GaussianCloud& stretched, const ScoreProvider& provider,
                                           const ObjectSpec& obj, const ScoredView& view, const OptimizerConfig& cfg) {
    std::vector<double> mags(stretched.size(), 0.0);
    const std::size_t batches = std::max<std::size_t>(1, std::min<std::size_t>(cfg.grad_batches, stretched.size()));
    const std::size_t per = (stretched.size() + batches - 1) / batches;
    const double h = cfg.fd_step;
    for (std::size_t b0 = 0; b0 < stretched.size(); b0 += per) {
        const std::size_t b1 = std::min(stretched.size(), b0 + per);
        Vec3 g;
        for (int axis = 0; axis < 3; ++axis) {
            GaussianCloud plus = stretched;
            GaussianCloud minus = stretched;
            for (std::size_t i = b0; i < b1; ++i) {
                plus.p[i][axis] += h;
                minus.p[i][axis] -= h;
            }
            const double lp = provider.evaluate(render(plus, view.camera, cfg.background), obj.prompt, view.id);
            const double lm = provider.evaluate(render(minus, view.camera, cfg.background), obj.prompt, view.id);
            g[axis] = (lp - lm) / (2.0 * h);
        }
        for (std::size_t i = b0; i < b1; ++i) mags[i] = g.norm();
    }
    return mags;
}

} // namespace detail

/// Result of one local step, for logging and tests.
struct LocalStepInfo {
    std::int64_t k = 0;
    Vec3 stretch = Vec3::Ones();
    double loss = 0.0;
    bool densified = false;
};

inline LocalStepInfo local_step(GaussianScene& scene, const std::string& id, const ScoreProvider& provider,
                                OptState& st, const OptimizerConfig& cfg) {
    const ObjectSpec* obj = st.guide.find(id);
    if (!obj) throw UnknownObject("no object '" + id + "' in guide");
    GaussianCloud& cloud = scene.cloud(id);
    if (cloud.empty()) throw EmptyCloud("object '" + id + "' has no Gaussians");
    ObjectProgress& prog = st.progress.at(id);

    LocalStepInfo info;
    prog.k += 1;
    info.k = prog.k;
    info.stretch = current_stretch(cloud, *obj, prog, cfg);
    const GaussianCloud stretched = apply_stretch(cloud, info.stretch);

    const Extent e = extent(stretched);
    const std::optional<ScoredView> view =
        pick_view(provider, id, e.centroid, kOrbitRadiusFactor * e.size.norm(), st.rng, cfg);
    if (view) info.loss = provider.evaluate(render(stretched, view->camera, cfg.background), obj->prompt, view->id);
    prog.last_local_loss = info.loss;

    if (should_densify(prog.k, cfg.densify, obj->pervasive)) {
        std::vector<double> mags(cloud.size(), 0.0);
        if (view) mags = detail::batch_grad_mags(stretched, provider, *obj, *view, cfg);
        GaussianCloud next = prune(densify_step(cloud, mags, cfg.densify, st.rng), cfg.densify, obj->pervasive);
        // An object is never pruned away entirely.
        if (!next.empty()) cloud = std::move(next);
        info.densified = true;
    }
    return info;
}

namespace detail {

inline double scene_score(const GaussianScene& scene, const SceneGuide& guide, const StretchMap& stretches,
                          const ScoreProvider& provider, const ScoredView& view, const OptimizerConfig& cfg) {
    GaussianCloud all;
    for (const auto& o : guide.objects) {
        const GaussianCloud c = compose_to_global(scene.cloud(o.id), o.transform, stretches.at(o.id));
        for (std::size_t i = 0; i < c.size(); ++i) all.push_back_from(c, i);
    }
    return provider.evaluate(render(all, view.camera, cfg.background), guide.scene_prompt, view.id);
}

} // namespace detail

/// Per-object gradients of one global step.
struct GlobalGrad {
    Vec3 cross_xyz = Vec3::Zero();
    Vec3 global_xyz = Vec3::Zero();
    Vec3 global_whl = Vec3::Zero();
    Vec3 global_rot = Vec3::Zero(); // rotation-vector gradient
};

struct GlobalStepInfo {
    TraceRow row;
    std::vector<CollisionReport> collisions;
    std::map<std::string, GlobalGrad> grads;
};

inline GlobalStepInfo global_step(GaussianScene& scene, const ScoreProvider& provider, OptState& st,
                                  const OptimizerConfig& cfg) {
    check_scene(scene);
    GlobalStepInfo info;
    const StretchMap stretches = current_stretches(scene, st, cfg);
    const double theta = st.guide.collision_threshold;

    std::map<std::string, GaussianCloud> composed;
    for (const auto& o : st.guide.objects) {
        composed.emplace(o.id, compose_to_global(scene.cloud(o.id), o.transform, stretches.at(o.id)));
    }
    info.collisions = scene_collision(composed, st.guide, theta);
    const double cross = total_collision_loss(info.collisions);
    for (const auto& o : st.guide.objects) info.grads[o.id] = {};
    for (const auto& r : info.collisions) {
        info.grads[r.id_a].cross_xyz += r.grad_xyz_a;
        info.grads[r.id_b].cross_xyz += r.grad_xyz_b;
    }

    double global = 0.0;
    GaussianCloud all;
    if (!provider.is_constant()) {
        GaussianScene tmp{st.guide, {}};
        all = merge_composed(tmp, composed);
    }
    std::optional<ScoredView> scene_view;
    if (!all.empty()) {
        const Extent e = extent(all);
        scene_view = pick_view(provider, "scene", e.centroid, kOrbitRadiusFactor * e.size.norm(), st.rng, cfg);
    }
    if (scene_view) {
        const ScoredView& view = *scene_view;
        global = provider.evaluate(render(all, view.camera, cfg.background), st.guide.scene_prompt, view.id);

        if (st.lambda[2] > 0.0) {
            const double h = cfg.fd_step;
            for (auto& o : st.guide.objects) {
                if (o.frozen) continue;
                GlobalGrad& g = info.grads[o.id];
                const ObjectTransform saved = o.transform;
                auto central = [&](auto&& perturb) {
                    perturb(+h);
                    const double lp = detail::scene_score(scene, st.guide, stretches, provider, view, cfg);
                    o.transform = saved;
                    perturb(-h);
                    const double lm = detail::scene_score(scene, st.guide, stretches, provider, view, cfg);
                    o.transform = saved;
                    return (lp - lm) / (2.0 * h);
                };
                for (int a = 0; a < 3; ++a) {
                    g.global_xyz[a] = central([&](double d) { o.transform.xyz[a] += d; });
                }
                // whl enters through the ramp stretch; the captured extent stays fixed.
                const ObjectProgress& prog = st.progress.at(o.id);
                for (int a = 0; a < 3; ++a) {
                    auto whl_score = [&](double d) {
                        SceneGuide moved = st.guide;
                        ObjectSpec& mo = *moved.find(o.id);
                        mo.transform.whl[a] += d;
                        StretchMap s = stretches;
                        s[o.id] = peek_stretch(scene.cloud(o.id), mo, prog, cfg);
                        return detail::scene_score(scene, moved, s, provider, view, cfg);
                    };
                    g.global_whl[a] = (whl_score(+h) - whl_score(-h)) / (2.0 * h);
                }
                if (cfg.optimize_quad) {
                    for (int a = 0; a < 3; ++a) {
                        g.global_rot[a] = central([&](double d) {
                            o.transform.quad = quat_mul(Quaternion::from_rotation_vector(Vec3::Unit(a) * d), saved.quad);
                        });
                    }
                }
            }
        }
    }

    double local_sum = 0.0;
    for (const auto& o : st.guide.objects) local_sum += st.progress.at(o.id).last_local_loss;

    info.row.step = st.global_step;
    info.row.local = local_sum;
    info.row.cross = cross;
    info.row.global = global;
    info.row.total = st.lambda[0] * local_sum + st.lambda[1] * cross + st.lambda[2] * global;

    SceneGuide next = st.guide;
    for (auto& o : next.objects) {
        if (o.frozen) continue;
        const GlobalGrad& g = info.grads.at(o.id);
        const Vec3 dxyz = st.lambda[1] * g.cross_xyz + st.lambda[2] * g.global_xyz;
        const Vec3 dwhl = st.lambda[2] * g.global_whl;
        if (!dxyz.isZero(0.0)) o.transform.xyz -= st.lr_xyz * dxyz;
        if (!dwhl.isZero(0.0)) o.transform.whl -= st.lr_whl * dwhl;
        if (cfg.optimize_quad) {
            const Vec3 drot = st.lambda[2] * g.global_rot;
            if (!drot.isZero(0.0)) {
                o.transform.quad = quat_mul(Quaternion::from_rotation_vector(-st.lr_quad * drot), o.transform.quad);
            }
        }
    }
    if (validate_guide(next).empty()) {
        st.guide = std::move(next);
    } else {
        // Reject the update (e.g. whl driven non-positive) and back off.
        info.row.accepted = false;
        st.lr_whl *= 0.5;
    }
    st.global_step += 1;
    st.trace.push_back(info.row);
    scene.guide = st.guide;
    return info;
}

struct LayoutResult {
    SceneGuide guide;
    std::vector<TraceRow> trace;
};

/// Round-robin: one local step per object (guide order), then one global step.
inline LayoutResult optimize_layout(GaussianScene& scene, const ScoreProvider& provider, std::int64_t iters,
                                    OptState& st, const OptimizerConfig& cfg) {
    if (iters < 0) throw PreconditionError("iteration count must be non-negative");
    const std::size_t first = st.trace.size();
    for (std::int64_t it = 0; it < iters; ++it) {
        for (const auto& o : st.guide.objects) local_step(scene, o.id, provider, st, cfg);
        global_step(scene, provider, st, cfg);
    }
    return {st.guide, std::vector<TraceRow>(st.trace.begin() + static_cast<std::ptrdiff_t>(first), st.trace.end())};
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "step,l_local,l_cross,l_global,total,accepted\n";
    out.precision(17);
    for (const auto& r : trace) {
        out << r.step << ',' << r.local << ',' << r.cross << ',' << r.global << ',' << r.total << ','
            << (r.accepted ? 1 : 0) << '\n';
    }
}

inline nlohmann::json to_json(const TraceRow& r) {
    return {{"step", r.step}, {"l_local", r.local}, {"l_cross", r.cross},
            {"l_global", r.global}, {"total", r.total}, {"accepted", r.accepted}};
}

} // namespace gsscene
