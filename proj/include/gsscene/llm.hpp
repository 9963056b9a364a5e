#pragma once

// Optional guide generation through an OpenAI-compatible chat-completions
// endpoint. The transport is injectable so tests replay recorded responses.

#include "gsscene/error.hpp"
#include "gsscene/guide.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gsscene {

struct LlmEndpoint {
    std::string base_url;                               // e.g. "https://api.example.com/v1"
    std::string model;
    std::string api_key_env = "GSSCENE_LLM_API_KEY";
    double timeout_seconds = 60.0;
};

/// Sends a request body to the endpoint and returns the raw response body.
/// Throws EndpointUnavailable on transport failure.
using LlmTransport = std::function<std::string(const LlmEndpoint&, const nlohmann::json& request)>;

inline constexpr int kDefaultReprompts = 2;

inline const std::string& guide_instruction_template() {
    static const std::string text = R"(You plan 3D scenes for a Gaussian-splatting scene generator.
Given a scene description, reply with ONLY a JSON document (no prose, no code fences) of the form:
{
  "scene_prompt": string,
  "collision_threshold": number (optional, scene units),
  "loss_weights": [number, number, number] (optional),
  "objects": [
    {
      "id": unique string,
      "cls": object category,
      "prompt": detailed description of this object alone,
      "pervasive": boolean, true only for scene-spanning weather or particle elements such as rain, snow or falling petals,
      "init": {"method": "uniform-box" | "sphere-surface", "count": integer >= 1, "base_color": [r, g, b] in [0, 1]},
      "transform": {"xyz": [x, y, z] center in scene units (z up),
                    "whl": [w, h, l] positive extents in scene units,
                    "quad": [qw, qx, qy, qz] unit quaternion, scalar first}
    }
  ]
}
Use "uniform-box" with a small count (50-300) for pervasive objects and "sphere-surface" otherwise.
Keep solid objects from intersecting and sized plausibly relative to each other.)";
    return text;
}

inline nlohmann::json build_llm_request(const LlmEndpoint& endpoint, const nlohmann::json& messages) {
    return {{"model", endpoint.model}, {"temperature", 0}, {"messages", messages}};
}

/// Pulls the assistant text out of a chat-completions response, falling back
/// to the raw body. Then cuts the outermost {...} span to tolerate fences.
inline std::string extract_guide_document(const std::string& raw) {
    std::string content = raw;
    try {
        const auto j = nlohmann::json::parse(raw);
        if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
            const auto& msg = j["choices"][0]["message"]["content"];
            if (msg.is_string()) content = msg.get<std::string>();
        }
    } catch (const nlohmann::json::exception&) {
    }
    const auto open = content.find('{');
    const auto close = content.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return content;
    return content.substr(open, close - open + 1);
}

struct GenerationResult {
    SceneGuide guide;
    /// Every raw response received, in order, for audit.
    std::vector<std::string> raw_responses;
};

inline GenerationResult generate_guide(std::string_view scene_prompt, const LlmEndpoint& endpoint,
                                       const LlmTransport& transport, int reprompts = kDefaultReprompts) {
    if (scene_prompt.empty()) throw PreconditionError("scene prompt must be non-empty");
    if (reprompts < 0) throw PreconditionError("reprompt count must be non-negative");
    using nlohmann::json;
    json messages = json::array({{{"role", "system"}, {"content", guide_instruction_template()}},
                                 {{"role", "user"}, {"content", std::string(scene_prompt)}}});
    GenerationResult result;
    std::string last_error;
    for (int attempt = 0; attempt <= reprompts; ++attempt) {
        const std::string raw = transport(endpoint, build_llm_request(endpoint, messages));
        result.raw_responses.push_back(raw);
        const std::string doc = extract_guide_document(raw);
        try {
            result.guide = parse_guide(doc);
            return result;
        } catch (const MalformedDocument& e) {
            last_error = e.what();
        } catch (const SchemaViolation& e) {
            last_error = e.what();
        }
        messages.push_back({{"role", "assistant"}, {"content", doc}});
        messages.push_back({{"role", "user"},
                            {"content", "That reply was not a valid guide document (" + last_error +
                                            "). Reply with only the corrected JSON document."}});
    }
    throw ResponseNotParseable("no parseable guide after " + std::to_string(reprompts + 1) +
                               " attempts; last error: " + last_error);
}

/// Reads the API key from the endpoint's environment variable; empty when unset.
inline std::string llm_api_key(const LlmEndpoint& endpoint) {
    const char* v = std::getenv(endpoint.api_key_env.c_str());
    return v ? std::string(v) : std::string();
}

} // namespace gsscene
