#pragma once

// Scene directory layout:
//
//   guide.json          scene guide
//   config.json         seeds, schedule, densification, optimizer, render defaults
//   objects/<id>.ply    one local-frame cloud per object
//   renders/            render outputs

#include "gsscene/densify.hpp"
#include "gsscene/guide.hpp"
#include "gsscene/image_io.hpp"
#include "gsscene/optimizer.hpp"
#include "gsscene/ply.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace gsscene {

namespace fs = std::filesystem;

struct SceneConfig {
    std::uint64_t seed = 0;
    std::int64_t iters = 100;
    std::string provider = "null";
    std::optional<std::string> target_dir;
    OptimizerConfig optimizer;
    std::optional<double> rho; // default: default_rho(guide)
    int render_width = 128;
    int render_height = 128;
    Vec3 background = Vec3::Ones();
};

namespace detail {

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileNotFound("cannot open '" + path.string() + "' for writing");
    out << text;
}

inline nlohmann::json parse_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocument("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// 64-bit FNV-1a, used to derive per-object seeds from ids.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaViolation(path + "/" + key, "wrong type");
    }
}

} // namespace detail

inline std::uint64_t object_seed(std::uint64_t scene_seed, std::string_view id) {
    return scene_seed ^ detail::fnv1a(id);
}

inline SceneConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaViolation("", "config must be an object");
    SceneConfig c;
    detail::read_opt(j, "seed", c.seed, "");
    c.optimizer.seed = c.seed;
    if (auto s = j.find("schedule"); s != j.end()) {
        detail::read_opt(*s, "warmup", c.optimizer.schedule.warmup, "/schedule");
        detail::read_opt(*s, "saturation", c.optimizer.schedule.saturation, "/schedule");
    }
    if (c.optimizer.schedule.warmup < 0 || c.optimizer.schedule.saturation < 1) {
        throw InvariantViolation("schedule needs warmup >= 0 and saturation >= 1");
    }
    if (auto d = j.find("densify"); d != j.end()) {
        auto& dc = c.optimizer.densify;
        detail::read_opt(*d, "interval", dc.interval, "/densify");
        detail::read_opt(*d, "tau", dc.tau, "/densify");
        double rho = 0.0;
        if (d->contains("rho") && !(*d)["rho"].is_null()) {
            detail::read_opt(*d, "rho", rho, "/densify");
            c.rho = rho;
        }
        detail::read_opt(*d, "alpha_min", dc.alpha_min, "/densify");
        detail::read_opt(*d, "grad_threshold", dc.grad_threshold, "/densify");
    }
    if (auto o = j.find("optimizer"); o != j.end()) {
        auto& oc = c.optimizer;
        detail::read_opt(*o, "iters", c.iters, "/optimizer");
        detail::read_opt(*o, "seed", oc.seed, "/optimizer");
        detail::read_opt(*o, "provider", c.provider, "/optimizer");
        std::string target_dir;
        detail::read_opt(*o, "target_dir", target_dir, "/optimizer");
        if (!target_dir.empty()) c.target_dir = target_dir;
        double v = 0.0;
        if (o->contains("lr_xyz") && !(*o)["lr_xyz"].is_null()) {
            detail::read_opt(*o, "lr_xyz", v, "/optimizer");
            oc.lr_xyz = v;
        }
        if (o->contains("lr_whl") && !(*o)["lr_whl"].is_null()) {
            detail::read_opt(*o, "lr_whl", v, "/optimizer");
            oc.lr_whl = v;
        }
        detail::read_opt(*o, "lr_quad", oc.lr_quad, "/optimizer");
        detail::read_opt(*o, "optimize_quad", oc.optimize_quad, "/optimizer");
        if (o->contains("lambda") && !(*o)["lambda"].is_null()) {
            std::array<double, 3> l{};
            detail::read_opt(*o, "lambda", l, "/optimizer");
            oc.lambda = l;
        }
        detail::read_opt(*o, "fd_step", oc.fd_step, "/optimizer");
        detail::read_opt(*o, "grad_batches", oc.grad_batches, "/optimizer");
        detail::read_opt(*o, "render_width", oc.render_width, "/optimizer");
        detail::read_opt(*o, "render_height", oc.render_height, "/optimizer");
        detail::read_opt(*o, "fov_y_deg", oc.fov_y_deg, "/optimizer");
    }
    if (c.provider != "null" && c.provider != "photometric") {
        throw SchemaViolation("/optimizer/provider", "expected \"null\" or \"photometric\"");
    }
    if (auto r = j.find("render"); r != j.end()) {
        detail::read_opt(*r, "width", c.render_width, "/render");
        detail::read_opt(*r, "height", c.render_height, "/render");
        if (r->contains("background")) c.background = detail::get_vec3((*r)["background"], "/render/background");
    }
    c.optimizer.background = c.background;
    return c;
}

inline nlohmann::json config_to_json(const SceneConfig& c) {
    using nlohmann::json;
    const auto& oc = c.optimizer;
    json opt = {{"iters", c.iters},
                {"seed", oc.seed},
                {"provider", c.provider},
                {"lr_quad", oc.lr_quad},
                {"optimize_quad", oc.optimize_quad},
                {"fd_step", oc.fd_step},
                {"grad_batches", oc.grad_batches},
                {"render_width", oc.render_width},
                {"render_height", oc.render_height},
                {"fov_y_deg", oc.fov_y_deg}};
    opt["target_dir"] = c.target_dir ? json(*c.target_dir) : json(nullptr);
    opt["lr_xyz"] = oc.lr_xyz ? json(*oc.lr_xyz) : json(nullptr);
    opt["lr_whl"] = oc.lr_whl ? json(*oc.lr_whl) : json(nullptr);
    opt["lambda"] = oc.lambda ? json(*oc.lambda) : json(nullptr);
    return {{"seed", c.seed},
            {"schedule", {{"warmup", oc.schedule.warmup}, {"saturation", oc.schedule.saturation}}},
            {"densify",
             {{"interval", oc.densify.interval},
              {"tau", oc.densify.tau},
              {"rho", c.rho ? json(*c.rho) : json(nullptr)},
              {"alpha_min", oc.densify.alpha_min},
              {"grad_threshold", oc.densify.grad_threshold}}},
            {"optimizer", opt},
            {"render",
             {{"width", c.render_width},
              {"height", c.render_height},
              {"background", {c.background.x(), c.background.y(), c.background.z()}}}}};
}

/// Optimizer config with scene-dependent defaults resolved.
inline OptimizerConfig resolve_optimizer(const SceneConfig& c, const SceneGuide& guide) {
    OptimizerConfig oc = c.optimizer;
    oc.densify.rho = c.rho.value_or(default_rho(guide));
    check_config(oc.densify);
    return oc;
}

/// Builds the initial local-frame cloud of one object. `base_dir` resolves
/// relative external-file paths.
inline GaussianCloud init_object(const ObjectSpec& obj, std::uint64_t scene_seed, const fs::path& base_dir) {
    const std::uint64_t seed = object_seed(scene_seed, obj.id);
    switch (obj.init.method) {
    case InitMethod::UniformBox: return sparse_init(obj.init, obj.transform.whl, seed);
    case InitMethod::SphereSurface: return sphere_surface_init(obj.init, seed);
    case InitMethod::ExternalFile: {
        fs::path p = *obj.init.path;
        if (p.is_relative()) p = base_dir / p;
        GaussianCloud c = load_ply(p);
        if (c.empty()) throw EmptyCloud("external file '" + p.string() + "' has no Gaussians");
        return c;
    }
    }
    throw PreconditionError("unknown init method");
}

inline GaussianScene init_scene(const SceneGuide& guide, std::uint64_t seed, const fs::path& base_dir) {
    if (auto v = validate_guide(guide); !v.empty()) throw InvariantViolation("guide is invalid: " + v.front().message);
    GaussianScene scene{guide, {}};
    for (const auto& o : guide.objects) scene.clouds.emplace(o.id, init_object(o, seed, base_dir));
    return scene;
}

struct LoadedScene {
    GaussianScene scene;
    SceneConfig config;
};

inline SceneGuide load_guide_file(const fs::path& path) { return parse_guide(detail::read_text(path)); }

inline LoadedScene load_scene_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw FileNotFound("scene directory '" + dir.string() + "' does not exist");
    LoadedScene out;
    out.scene.guide = load_guide_file(dir / "guide.json");
    if (fs::exists(dir / "config.json")) out.config = config_from_json(detail::parse_json_file(dir / "config.json"));
    for (const auto& o : out.scene.guide.objects) {
        out.scene.clouds.emplace(o.id, load_ply(dir / "objects" / (o.id + ".ply")));
    }
    check_scene(out.scene);
    return out;
}

inline void save_scene_dir(const GaussianScene& scene, const SceneConfig& config, const fs::path& dir) {
    check_scene(scene);
    fs::create_directories(dir / "objects");
    fs::create_directories(dir / "renders");
    detail::write_text(dir / "guide.json", serialize_guide(scene.guide));
    detail::write_text(dir / "config.json", config_to_json(config).dump(2) + "\n");
    for (const auto& [id, cloud] : scene.clouds) save_ply(cloud, dir / "objects" / (id + ".ply"));
}

/// Reads `<dir>/targets.json`:
///   {"views": [{"id", "scope", "camera": {...}, "image": "file.png"}]}
/// where scope is an object id or "scene".
inline std::unique_ptr<PhotometricProvider> load_photometric_targets(const fs::path& dir) {
    const nlohmann::json j = detail::parse_json_file(dir / "targets.json");
    if (!j.contains("views") || !j["views"].is_array()) throw SchemaViolation("/views", "expected an array");
    auto provider = std::make_unique<PhotometricProvider>();
    for (std::size_t i = 0; i < j["views"].size(); ++i) {
        const auto& v = j["views"][i];
        const std::string path = "/views/" + std::to_string(i);
        const std::string id = detail::get_string(detail::require(v, "id", path), path + "/id");
        const std::string scope = detail::get_string(detail::require(v, "scope", path), path + "/scope");
        const Camera cam = camera_from_json(detail::require(v, "camera", path));
        const std::string image = detail::get_string(detail::require(v, "image", path), path + "/image");
        provider->add_target(id, scope, cam, read_rgb_png(dir / image));
    }
    return provider;
}

inline std::unique_ptr<ScoreProvider> make_provider(const SceneConfig& c, const fs::path& scene_dir) {
    if (c.provider == "null") return std::make_unique<NullProvider>();
    if (!c.target_dir) throw PreconditionError("photometric provider needs optimizer.target_dir");
    fs::path dir = *c.target_dir;
    if (dir.is_relative()) dir = scene_dir / dir;
    return load_photometric_targets(dir);
}

} // namespace gsscene
