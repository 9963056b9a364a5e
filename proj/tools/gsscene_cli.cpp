// gsscene: command-line front end for guide validation, scene
// initialization, composition, rendering, layout optimization, collision
// reporting and the editing service.

#include "gsscene/gsscene.hpp"
#include "gsscene/llm_http.hpp"
#include "gsscene/service.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace gsscene;

namespace {

constexpr int kExitModuleError = 1;
constexpr int kExitUsage = 2;

int report(const Error& e) {
    nlohmann::json j = {{"error", e.kind()}, {"message", e.what()}};
    if (const auto* sv = dynamic_cast<const SchemaViolation*>(&e)) j["path"] = sv->path();
    std::cerr << j.dump() << "\n";
    return kExitModuleError;
}

int cmd_validate(const fs::path& guide_path) {
    const SceneGuide g = load_guide_file(guide_path);
    const auto violations = validate_guide(g);
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : violations) v.push_back(to_json(x));
    std::cout << nlohmann::json{{"valid", violations.empty()}, {"objects", g.objects.size()}, {"violations", v}}.dump()
              << "\n";
    return violations.empty() ? 0 : kExitModuleError;
}

int cmd_init(const fs::path& guide_path, const fs::path& out_dir, const std::string& config_path,
             std::optional<std::uint64_t> seed) {
    const SceneGuide g = load_guide_file(guide_path);
    SceneConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(detail::parse_json_file(config_path));
    if (seed) {
        cfg.seed = *seed;
        cfg.optimizer.seed = *seed;
    }
    const GaussianScene scene = init_scene(g, cfg.seed, guide_path.parent_path());
    save_scene_dir(scene, cfg, out_dir);
    std::size_t total = 0;
    for (const auto& [id, c] : scene.clouds) total += c.size();
    std::cout << nlohmann::json{{"scene_dir", out_dir.string()}, {"objects", scene.clouds.size()}, {"gaussians", total}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_compose(const fs::path& scene_dir, const fs::path& out) {
    const LoadedScene loaded = load_scene_dir(scene_dir);
    const GaussianCloud all = merge_composed(loaded.scene, compose_scene(loaded.scene));
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_ply(all, out);
    std::cout << nlohmann::json{{"output", out.string()}, {"gaussians", all.size()}}.dump() << "\n";
    return 0;
}

int cmd_render(const fs::path& scene_dir, const fs::path& camera_path, const fs::path& out_dir, int tile_size) {
    const LoadedScene loaded = load_scene_dir(scene_dir);
    const Camera cam = camera_from_json(detail::parse_json_file(camera_path));
    const GaussianCloud all = merge_composed(loaded.scene, compose_scene(loaded.scene));
    const RenderOutput out = render(all, cam, loaded.config.background, RenderOptions{tile_size});
    write_render(out, out_dir);
    std::cout << nlohmann::json{{"output_dir", out_dir.string()}, {"width", out.width}, {"height", out.height}}.dump()
              << "\n";
    return 0;
}

int cmd_optimize(const fs::path& scene_dir, std::optional<std::int64_t> iters, const std::string& provider_name,
                 const std::string& targets, fs::path out_dir, bool in_place) {
    LoadedScene loaded = load_scene_dir(scene_dir);
    SceneConfig cfg = loaded.config;
    if (!provider_name.empty()) cfg.provider = provider_name;
    if (!targets.empty()) cfg.target_dir = fs::absolute(targets).string();
    const std::int64_t n = iters.value_or(cfg.iters);
    const auto provider = make_provider(cfg, scene_dir);
    const OptimizerConfig oc = resolve_optimizer(cfg, loaded.scene.guide);
    OptState st = init_state(loaded.scene, oc);
    const LayoutResult result = optimize_layout(loaded.scene, *provider, n, st, oc);

    if (in_place) out_dir = scene_dir;
    if (out_dir.empty()) out_dir = scene_dir / "optimized";
    fs::create_directories(out_dir);
    detail::write_text(out_dir / "guide.json", serialize_guide(result.guide));
    std::ofstream trace(out_dir / "trace.csv", std::ios::trunc);
    write_trace_csv(trace, result.trace);
    if (in_place) save_scene_dir(loaded.scene, loaded.config, scene_dir);

    nlohmann::json summary = {{"output_dir", out_dir.string()}, {"iters", n}, {"provider", provider->name()}};
    if (!result.trace.empty()) summary["final"] = to_json(result.trace.back());
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_collide(const fs::path& scene_dir) {
    const LoadedScene loaded = load_scene_dir(scene_dir);
    const auto reports = scene_collision(loaded.scene);
    std::cout << nlohmann::json{{"theta", loaded.scene.guide.collision_threshold},
                                {"total", total_collision_loss(reports)},
                                {"collisions", to_json(reports)}}
                     .dump(2)
              << "\n";
    return 0;
}

int cmd_serve(const fs::path& scene_dir, const std::string& host, int port) {
    LoadedScene loaded = load_scene_dir(scene_dir);
    auto provider = make_provider(loaded.config, scene_dir);
    SceneService service(SceneSession(std::move(loaded.scene), loaded.config, std::move(provider)));
    httplib::Server server;
    service.mount(server);
    std::cerr << "serving " << scene_dir.string() << " on http://" << host << ":" << port << "\n";
    if (!server.listen(host, port)) throw Error("ServeError", "cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

int cmd_generate(const std::string& prompt, const fs::path& out, const LlmEndpoint& endpoint, int retries) {
    GenerationResult result;
    std::exception_ptr failure;
    std::vector<std::string> raw;
    auto transport = http_llm_transport();
    // Record every raw response, including those of failed attempts.
    auto recording = [&](const LlmEndpoint& e, const nlohmann::json& req) {
        raw.push_back(transport(e, req));
        return raw.back();
    };
    try {
        result = generate_guide(prompt, endpoint, recording, retries);
    } catch (...) {
        failure = std::current_exception();
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    if (!raw.empty()) {
        fs::path audit = out;
        audit += ".raw.json";
        detail::write_text(audit, nlohmann::json(raw).dump(2) + "\n");
    }
    if (failure) std::rethrow_exception(failure);
    detail::write_text(out, serialize_guide(result.guide));
    std::cout << nlohmann::json{{"output", out.string()}, {"objects", result.guide.objects.size()}}.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional 3D Gaussian scene tool"};
    app.require_subcommand(1);

    std::string guide_path, scene_dir, out, camera, config_path, provider, targets, host = "127.0.0.1";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> iters;
    int tile_size = kDefaultTileSize;
    int port = 7878;
    bool in_place = false;

    auto* validate = app.add_subcommand("validate", "Check a guide document");
    validate->add_option("guide", guide_path, "guide JSON")->required();

    auto* init = app.add_subcommand("init", "Initialize per-object clouds from a guide");
    init->add_option("guide", guide_path, "guide JSON")->required();
    init->add_option("-o,--out", out, "scene directory")->required();
    init->add_option("--config", config_path, "config JSON to copy into the scene");
    init->add_option("--seed", seed, "scene seed");

    auto* compose = app.add_subcommand("compose", "Compose all objects into one scene-frame PLY");
    compose->add_option("scene_dir", scene_dir)->required();
    compose->add_option("-o,--out", out, "output PLY")->required();

    auto* rend = app.add_subcommand("render", "Render rgb/depth PNGs");
    rend->add_option("scene_dir", scene_dir)->required();
    rend->add_option("--camera", camera, "camera JSON")->required();
    rend->add_option("-o,--out", out, "output directory")->required();
    rend->add_option("--tile-size", tile_size)->check(CLI::PositiveNumber);

    auto* opt = app.add_subcommand("optimize", "Run local-global layout optimization");
    opt->add_option("scene_dir", scene_dir)->required();
    opt->add_option("--iters", iters, "iterations (default from config)")->check(CLI::NonNegativeNumber);
    opt->add_option("--provider", provider, "score provider")->check(CLI::IsMember({"null", "photometric"}));
    opt->add_option("--targets", targets, "photometric target directory (targets.json)");
    opt->add_option("-o,--out", out, "output directory (default <scene_dir>/optimized)");
    opt->add_flag("--in-place", in_place, "write the refined guide and clouds back into the scene");

    auto* collide = app.add_subcommand("collide", "Print the collision matrix");
    collide->add_option("scene_dir", scene_dir)->required();

    auto* serve = app.add_subcommand("serve", "Start the editing service");
    serve->add_option("scene_dir", scene_dir)->required();
    serve->add_option("--port", port)->check(CLI::Range(1, 65535));
    serve->add_option("--host", host);

    auto* guide = app.add_subcommand("guide", "Guide utilities");
    guide->require_subcommand(1);
    auto* gen = guide->add_subcommand("generate", "Ask an LLM endpoint for a guide");
    std::string prompt;
    LlmEndpoint endpoint;
    int retries = kDefaultReprompts;
    gen->add_option("prompt", prompt, "scene description")->required();
    gen->add_option("-o,--out", out, "output guide JSON")->required();
    gen->add_option("--base-url", endpoint.base_url, "OpenAI-compatible base URL")->required();
    gen->add_option("--model", endpoint.model)->required();
    gen->add_option("--api-key-env", endpoint.api_key_env);
    gen->add_option("--timeout", endpoint.timeout_seconds);
    gen->add_option("--retries", retries)->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*validate) return cmd_validate(guide_path);
        if (*init) return cmd_init(guide_path, out, config_path, seed);
        if (*compose) return cmd_compose(scene_dir, out);
        if (*rend) return cmd_render(scene_dir, camera, out, tile_size);
        if (*opt) return cmd_optimize(scene_dir, iters, provider, targets, out, in_place);
        if (*collide) return cmd_collide(scene_dir);
        if (*serve) return cmd_serve(scene_dir, host, port);
        if (*gen) return cmd_generate(prompt, out, endpoint, retries);
    } catch (const Error& e) {
        return report(e);
    } catch (const std::filesystem::filesystem_error& e) {
        return report(FileNotFound(e.what()));
    }
    return kExitUsage;
}
