#pragma once

// Scene guide: the per-object plan (class, initialization, transform,
// prompt) plus scene-level collision threshold and loss weights.

#include "gsscene/error.hpp"
#include "gsscene/quaternion.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gsscene {

/// Quaternions in a guide document within this distance of unit norm are
/// renormalized; anything further off is rejected.
inline constexpr double kGuideQuatTolerance = 1e-2;

struct ObjectTransform {
    Vec3 xyz = Vec3::Zero();
    Vec3 whl = Vec3::Ones();
    Quaternion quad;

    friend bool operator==(const ObjectTransform&, const ObjectTransform&) = default;
};

enum class InitMethod { UniformBox, SphereSurface, ExternalFile };

inline std::string_view to_string(InitMethod m) noexcept {
    switch (m) {
    case InitMethod::UniformBox: return "uniform-box";
    case InitMethod::SphereSurface: return "sphere-surface";
    case InitMethod::ExternalFile: return "external-file";
    }
    return "uniform-box";
}

inline std::optional<InitMethod> parse_init_method(std::string_view s) noexcept {
    if (s == "uniform-box") return InitMethod::UniformBox;
    if (s == "sphere-surface") return InitMethod::SphereSurface;
    if (s == "external-file") return InitMethod::ExternalFile;
    return std::nullopt;
}

struct InitSpec {
    InitMethod method = InitMethod::UniformBox;
    long long count = 1;
    Vec3 base_color = Vec3::Constant(0.5);
    std::optional<std::string> path;

    friend bool operator==(const InitSpec&, const InitSpec&) = default;
};

struct ObjectSpec {
    std::string id;
    std::string cls;
    InitSpec init;
    ObjectTransform transform;
    std::string prompt;
    bool pervasive = false;
    /// Excluded from layout updates by the optimizer.
    bool frozen = false;

    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct SceneGuide {
    std::string scene_prompt;
    std::vector<ObjectSpec> objects;
    double collision_threshold = 0.05;
    std::array<double, 3> loss_weights{1.0, 10.0, 1.0};

    const ObjectSpec* find(std::string_view id) const noexcept {
        for (const auto& o : objects) {
            if (o.id == id) return &o;
        }
        return nullptr;
    }
    ObjectSpec* find(std::string_view id) noexcept {
        for (auto& o : objects) {
            if (o.id == id) return &o;
        }
        return nullptr;
    }

    friend bool operator==(const SceneGuide&, const SceneGuide&) = default;
};

struct Violation {
    std::string id;     // object id, empty for scene-level fields
    std::string field;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

inline nlohmann::json to_json(const Violation& v) {
    return {{"id", v.id}, {"field", v.field}, {"message", v.message}};
}

inline std::vector<Violation> validate_guide(const SceneGuide& guide) {
    std::vector<Violation> out;
    if (!(guide.collision_threshold > 0.0) || !std::isfinite(guide.collision_threshold)) {
        out.push_back({"", "collision_threshold", "must be a positive finite length"});
    }
    for (double lambda : guide.loss_weights) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            out.push_back({"", "loss_weights", "weights must be non-negative and finite"});
            break;
        }
    }
    if (guide.objects.empty()) out.push_back({"", "objects", "guide needs at least one object"});

    std::set<std::string> seen;
    for (const auto& o : guide.objects) {
        if (o.id.empty()) out.push_back({o.id, "id", "object id must be non-empty"});
        if (!seen.insert(o.id).second) out.push_back({o.id, "id", "duplicate object id '" + o.id + "'"});
        if (o.prompt.empty()) out.push_back({o.id, "prompt", "prompt must be non-empty"});
        if (o.init.count < 1) out.push_back({o.id, "init.count", "count must be at least 1"});
        if (o.init.method == InitMethod::ExternalFile && (!o.init.path || o.init.path->empty())) {
            out.push_back({o.id, "init.path", "external-file initialization requires a path"});
        }
        const Vec3& col = o.init.base_color;
        if (!((col.array() >= 0.0).all() && (col.array() <= 1.0).all())) {
            out.push_back({o.id, "init.base_color", "color components must lie in [0,1]"});
        }
        const ObjectTransform& t = o.transform;
        if (!t.xyz.allFinite()) out.push_back({o.id, "xyz", "position must be finite"});
        if (!t.whl.allFinite() || !(t.whl.array() > 0.0).all()) {
            out.push_back({o.id, "whl", "all extent components must be positive"});
        }
        if (!t.quad.is_unit()) out.push_back({o.id, "quad", "rotation must be a unit quaternion"});
    }
    return out;
}

/// Mean of all whl components, scaled by 0.05. Used when a document omits
/// the collision threshold.
inline double default_collision_threshold(const std::vector<ObjectSpec>& objects) {
    if (objects.empty()) return 0.05;
    double sum = 0.0;
    for (const auto& o : objects) sum += o.transform.whl.sum();
    return 0.05 * sum / (3.0 * static_cast<double>(objects.size()));
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaViolation(path + "/" + key, "missing required field");
    return *it;
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaViolation(path, "expected a string");
    return v.get<std::string>();
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaViolation(path, "expected a number");
    return v.get<double>();
}

template <std::size_t N>
std::array<double, N> get_numbers(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != N) {
        throw SchemaViolation(path, "expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = get_number(v[i], path + "/" + std::to_string(i));
    return out;
}

inline Vec3 get_vec3(const json& v, const std::string& path) {
    const auto a = get_numbers<3>(v, path);
    return {a[0], a[1], a[2]};
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline ObjectSpec parse_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaViolation(path, "expected an object");
    ObjectSpec o;
    o.id = get_string(require(j, "id", path), path + "/id");
    o.cls = get_string(require(j, "cls", path), path + "/cls");
    o.prompt = get_string(require(j, "prompt", path), path + "/prompt");
    if (auto it = j.find("pervasive"); it != j.end()) {
        if (!it->is_boolean()) throw SchemaViolation(path + "/pervasive", "expected a boolean");
        o.pervasive = it->get<bool>();
    }
    if (auto it = j.find("frozen"); it != j.end()) {
        if (!it->is_boolean()) throw SchemaViolation(path + "/frozen", "expected a boolean");
        o.frozen = it->get<bool>();
    }

    const std::string ip = path + "/init";
    const json& init = require(j, "init", path);
    if (!init.is_object()) throw SchemaViolation(ip, "expected an object");
    const std::string method = get_string(require(init, "method", ip), ip + "/method");
    auto m = parse_init_method(method);
    if (!m) throw SchemaViolation(ip + "/method", "unknown initialization method '" + method + "'");
    o.init.method = *m;
    const json& count = require(init, "count", ip);
    if (!count.is_number_integer()) throw SchemaViolation(ip + "/count", "expected an integer");
    o.init.count = count.get<long long>();
    o.init.base_color = get_vec3(require(init, "base_color", ip), ip + "/base_color");
    if (auto it = init.find("path"); it != init.end()) o.init.path = get_string(*it, ip + "/path");

    const std::string tp = path + "/transform";
    const json& tr = require(j, "transform", path);
    if (!tr.is_object()) throw SchemaViolation(tp, "expected an object");
    o.transform.xyz = get_vec3(require(tr, "xyz", tp), tp + "/xyz");
    o.transform.whl = get_vec3(require(tr, "whl", tp), tp + "/whl");
    o.transform.quad = Quaternion::from_array(get_numbers<4>(require(tr, "quad", tp), tp + "/quad"));
    return o;
}

} // namespace detail

inline nlohmann::json guide_to_json(const SceneGuide& guide) {
    using nlohmann::json;
    json objects = json::array();
    for (const auto& o : guide.objects) {
        json init = {{"method", std::string(to_string(o.init.method))},
                     {"count", o.init.count},
                     {"base_color", detail::vec3_json(o.init.base_color)}};
        if (o.init.path) init["path"] = *o.init.path;
        json obj = {{"id", o.id},
                    {"cls", o.cls},
                    {"prompt", o.prompt},
                    {"pervasive", o.pervasive},
                    {"init", init},
                    {"transform",
                     {{"xyz", detail::vec3_json(o.transform.xyz)},
                      {"whl", detail::vec3_json(o.transform.whl)},
                      {"quad", o.transform.quad.to_array()}}}};
        if (o.frozen) obj["frozen"] = true;
        objects.push_back(std::move(obj));
    }
    return {{"scene_prompt", guide.scene_prompt},
            {"collision_threshold", guide.collision_threshold},
            {"loss_weights", guide.loss_weights},
            {"objects", std::move(objects)}};
}

inline std::string serialize_guide(const SceneGuide& guide) { return guide_to_json(guide).dump(2) + "\n"; }

/// Builds a guide from an already-parsed JSON value. Shares the error
/// contract of parse_guide.
inline SceneGuide guide_from_json(const nlohmann::json& doc) {
    using nlohmann::json;
    if (!doc.is_object()) throw SchemaViolation("", "top level must be an object");
    SceneGuide g;
    g.scene_prompt = detail::get_string(detail::require(doc, "scene_prompt", ""), "/scene_prompt");
    const json& objs = detail::require(doc, "objects", "");
    if (!objs.is_array()) throw SchemaViolation("/objects", "expected an array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
        g.objects.push_back(detail::parse_object(objs[i], "/objects/" + std::to_string(i)));
    }
    if (auto it = doc.find("collision_threshold"); it != doc.end()) {
        g.collision_threshold = detail::get_number(*it, "/collision_threshold");
    } else {
        g.collision_threshold = default_collision_threshold(g.objects);
    }
    if (auto it = doc.find("loss_weights"); it != doc.end()) {
        g.loss_weights = detail::get_numbers<3>(*it, "/loss_weights");
    }

    for (auto& o : g.objects) {
        Quaternion& q = o.transform.quad;
        const double dev = std::abs(q.norm() - 1.0);
        if (!(dev <= kGuideQuatTolerance)) {
            throw InvariantViolation("object '" + o.id + "': quad norm " + std::to_string(q.norm()) +
                                     " is too far from 1 to renormalize");
        }
        // Leave already-unit quaternions bit-identical.
        if (dev > 1e-12) q = q.normalized();
    }

    const auto violations = validate_guide(g);
    if (!violations.empty()) {
        const Violation& v = violations.front();
        std::string where = v.id.empty() ? v.field : "object '" + v.id + "' field " + v.field;
        throw InvariantViolation(where + ": " + v.message);
    }
    return g;
}

/// Parses a UTF-8 JSON guide document. Throws MalformedDocument,
/// SchemaViolation or InvariantViolation.
inline SceneGuide parse_guide(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocument(std::string("guide is not valid JSON: ") + e.what());
    }
    return guide_from_json(doc);
}

} // namespace gsscene
