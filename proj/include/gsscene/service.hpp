#pragma once

// JSON-over-HTTP editing service around a single scene session.
//
//   GET  /scene                      guide + revision
//   GET  /objects/{id}/ply           binary PLY (?frame=global for the composed cloud)
//   POST /objects/{id}/transform     {xyz?, whl?, quad?, if_revision?}
//   POST /render                     {camera, background?}
//   POST /optimize/step              {count, if_revision?}
//   GET  /collisions                 current collision reports
//
// Mutations are serialized; reads and renders work on snapshots.

#include "gsscene/collision.hpp"
#include "gsscene/image_io.hpp"
#include "gsscene/optimizer.hpp"
#include "gsscene/ply.hpp"
#include "gsscene/scene_io.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace gsscene {

/// Editable scene state. `revision` grows by exactly one per accepted
/// mutation.
struct SceneSession {
    GaussianScene scene;
    SceneConfig config;
    OptimizerConfig optimizer;
    OptState state;
    std::uint64_t revision = 0;
    std::unique_ptr<ScoreProvider> provider;

    SceneSession(GaussianScene s, SceneConfig c, std::unique_ptr<ScoreProvider> p = nullptr)
        : scene(std::move(s)), config(std::move(c)), provider(std::move(p)) {
        check_scene(scene);
        if (!provider) provider = std::make_unique<NullProvider>();
        optimizer = resolve_optimizer(config, scene.guide);
        // Sessions start fully ramped so edits, renders and collisions all see
        // objects at their guide extents.
        state = init_state(scene, optimizer, optimizer.schedule.warmup + optimizer.schedule.saturation);
    }

    StretchMap stretches() const { return current_stretches(scene, state, optimizer); }

    std::vector<CollisionReport> collisions() const {
        const StretchMap s = stretches();
        return scene_collision(scene, scene.guide.collision_threshold, &s);
    }

    GaussianCloud composed() const {
        const StretchMap s = stretches();
        return merge_composed(scene, compose_scene(scene, &s));
    }
};

/// Outcome of an attempted edit, mapped onto HTTP status codes by the server.
struct EditResult {
    int status = 200;
    nlohmann::json body;
};

namespace detail {

inline nlohmann::json error_body(const std::string& kind, const std::string& message) {
    return {{"error", kind}, {"message", message}};
}

inline std::optional<std::uint64_t> requested_revision(const httplib::Request& req, const nlohmann::json& body) {
    if (req.has_header("If-Revision")) return std::stoull(req.get_header_value("If-Revision"));
    if (body.is_object() && body.contains("if_revision") && !body["if_revision"].is_null()) {
        return body["if_revision"].get<std::uint64_t>();
    }
    return std::nullopt;
}

} // namespace detail

/// Thread-safe wrapper over a session; the HTTP handlers call into this so
/// the same logic is testable without sockets.
class SceneService {
public:
    explicit SceneService(SceneSession session) : session_(std::move(session)) {}

    nlohmann::json get_scene() const {
        std::shared_lock lock(mutex_);
        return scene_json_locked();
    }

    nlohmann::json get_collisions() const {
        std::shared_lock lock(mutex_);
        return {{"revision", session_.revision}, {"collisions", to_json(session_.collisions())}};
    }

    std::uint64_t revision() const {
        std::shared_lock lock(mutex_);
        return session_.revision;
    }

    /// Binary PLY of one object, local frame or composed.
    std::optional<std::string> object_ply(const std::string& id, bool global) const {
        std::shared_lock lock(mutex_);
        const ObjectSpec* obj = session_.scene.guide.find(id);
        if (!obj) return std::nullopt;
        if (!global) return encode_ply(session_.scene.cloud(id));
        const StretchMap s = session_.stretches();
        return encode_ply(compose_object(session_.scene, *obj, &s));
    }

    EditResult edit_transform(const std::string& id, const nlohmann::json& body,
                              std::optional<std::uint64_t> if_revision) {
        std::unique_lock lock(mutex_);
        if (!session_.scene.guide.find(id)) {
            return {404, detail::error_body("UnknownObject", "no object '" + id + "'")};
        }
        if (if_revision && *if_revision != session_.revision) return stale_locked();
        if (!body.is_object()) return {400, detail::error_body("SchemaViolation", "body must be an object")};

        SceneGuide next = session_.scene.guide;
        ObjectSpec& obj = *next.find(id);
        try {
            if (body.contains("xyz")) obj.transform.xyz = detail::get_vec3(body["xyz"], "/xyz");
            if (body.contains("whl")) obj.transform.whl = detail::get_vec3(body["whl"], "/whl");
            if (body.contains("quad")) {
                Quaternion q = Quaternion::from_array(detail::get_numbers<4>(body["quad"], "/quad"));
                const double dev = std::abs(q.norm() - 1.0);
                if (dev <= kGuideQuatTolerance && dev > 1e-12) q = q.normalized();
                obj.transform.quad = q;
            }
        } catch (const SchemaViolation& e) {
            return {400, detail::error_body("SchemaViolation", e.what())};
        }
        auto violations = validate_guide(next);
        if (!violations.empty()) {
            nlohmann::json v = nlohmann::json::array();
            for (const auto& x : violations) v.push_back(to_json(x));
            return {422, {{"error", "InvariantViolation"}, {"violations", v}, {"revision", session_.revision}}};
        }
        session_.scene.guide = next;
        session_.state.guide = next;
        session_.revision += 1;
        return {200,
                {{"revision", session_.revision},
                 {"object", guide_to_json(next)["objects"][object_index(next, id)]},
                 {"collisions", to_json(session_.collisions())}}};
    }

    EditResult optimize_steps(std::int64_t count, std::optional<std::uint64_t> if_revision) {
        std::unique_lock lock(mutex_);
        if (if_revision && *if_revision != session_.revision) return stale_locked();
        if (count < 0) return {400, detail::error_body("PreconditionError", "count must be non-negative")};
        nlohmann::json trace = nlohmann::json::array();
        if (count > 0) {
            for (std::int64_t i = 0; i < count; ++i) {
                auto info = global_step(session_.scene, *session_.provider, session_.state, session_.optimizer);
                trace.push_back(to_json(info.row));
            }
            session_.revision += 1;
        }
        return {200,
                {{"revision", session_.revision},
                 {"trace", trace},
                 {"guide", guide_to_json(session_.scene.guide)},
                 {"collisions", to_json(session_.collisions())}}};
    }

    EditResult render_view(const nlohmann::json& body) const {
        GaussianCloud cloud;
        Vec3 background;
        std::uint64_t rev = 0;
        {
            std::shared_lock lock(mutex_);
            cloud = session_.composed();
            background = session_.config.background;
            rev = session_.revision;
        }
        if (!body.is_object() || !body.contains("camera")) {
            return {400, detail::error_body("SchemaViolation", "body needs a camera object")};
        }
        try {
            const Camera cam = camera_from_json(body["camera"]);
            if (body.contains("background")) background = detail::get_vec3(body["background"], "/background");
            const RenderOutput out = render(cloud, cam, background);
            DepthRange range;
            auto depth = encode_depth_png(out, &range);
            return {200,
                    {{"revision", rev},
                     {"rgb_png_base64", base64_encode(encode_rgb_png(out))},
                     {"depth_png_base64", base64_encode(depth)},
                     {"depth_range", range.to_json()}}};
        } catch (const Error& e) {
            const int status = e.kind() == "SchemaViolation" ? 400 : 422;
            return {status, detail::error_body(e.kind(), e.what())};
        }
    }

    /// Registers all routes on `server`.
    void mount(httplib::Server& server) {
        using httplib::Request;
        using httplib::Response;
        auto send = [](Response& res, int status, const nlohmann::json& body) {
            res.status = status;
            res.set_content(body.dump(), "application/json");
        };
        auto parse = [&](const Request& req, Response& res, nlohmann::json& out) {
            if (req.body.empty()) {
                out = nlohmann::json::object();
                return true;
            }
            try {
                out = nlohmann::json::parse(req.body);
                return true;
            } catch (const nlohmann::json::parse_error& e) {
                send(res, 400, detail::error_body("MalformedDocument", e.what()));
                return false;
            }
        };

        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type, If-Revision"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(.*)", [](const Request&, Response& res) { res.status = 204; });

        server.Get("/scene", [=, this](const Request&, Response& res) { send(res, 200, get_scene()); });
        server.Get("/collisions", [=, this](const Request&, Response& res) { send(res, 200, get_collisions()); });
        server.Get(R"(/objects/([^/]+)/ply)", [=, this](const Request& req, Response& res) {
            const bool global = req.has_param("frame") && req.get_param_value("frame") == "global";
            auto ply = object_ply(req.matches[1].str(), global);
            if (!ply) return send(res, 404, detail::error_body("UnknownObject", "no object '" + req.matches[1].str() + "'"));
            res.status = 200;
            res.set_content(*ply, "application/octet-stream");
        });
        server.Post(R"(/objects/([^/]+)/transform)", [=, this](const Request& req, Response& res) {
            nlohmann::json body;
            if (!parse(req, res, body)) return;
            std::optional<std::uint64_t> rev;
            try {
                rev = detail::requested_revision(req, body);
            } catch (const std::exception&) {
                return send(res, 400, detail::error_body("SchemaViolation", "if-revision must be an integer"));
            }
            auto r = edit_transform(req.matches[1].str(), body, rev);
            send(res, r.status, r.body);
        });
        server.Post("/optimize/step", [=, this](const Request& req, Response& res) {
            nlohmann::json body;
            if (!parse(req, res, body)) return;
            std::int64_t count = 1;
            std::optional<std::uint64_t> rev;
            try {
                if (body.contains("count")) count = body["count"].get<std::int64_t>();
                rev = detail::requested_revision(req, body);
            } catch (const std::exception&) {
                return send(res, 400, detail::error_body("SchemaViolation", "count and if_revision must be integers"));
            }
            auto r = optimize_steps(count, rev);
            send(res, r.status, r.body);
        });
        server.Post("/render", [=, this](const Request& req, Response& res) {
            nlohmann::json body;
            if (!parse(req, res, body)) return;
            auto r = render_view(body);
            send(res, r.status, r.body);
        });
        server.set_exception_handler([=](const Request&, Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const Error& e) {
                send(res, 500, detail::error_body(e.kind(), e.what()));
            } catch (const std::exception& e) {
                send(res, 500, detail::error_body("InternalError", e.what()));
            }
        });
    }

private:
    nlohmann::json scene_json_locked() const {
        return {{"revision", session_.revision}, {"guide", guide_to_json(session_.scene.guide)}};
    }

    EditResult stale_locked() const {
        return {409,
                {{"error", "StaleRevision"},
                 {"message", "scene revision has moved on"},
                 {"revision", session_.revision}}};
    }

    static std::size_t object_index(const SceneGuide& g, const std::string& id) {
        for (std::size_t i = 0; i < g.objects.size(); ++i) {
            if (g.objects[i].id == id) return i;
        }
        return 0;
    }

    mutable std::shared_mutex mutex_;
    SceneSession session_;
};

} // namespace gsscene
