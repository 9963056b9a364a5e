#pragma once

// cpp-httplib transport for guide generation. HTTPS needs
// CPPHTTPLIB_OPENSSL_SUPPORT defined before this header is included.

#include "gsscene/llm.hpp"

#include <httplib.h>

#include <string>

namespace gsscene {

inline LlmTransport http_llm_transport() {
    return [](const LlmEndpoint& endpoint, const nlohmann::json& request) -> std::string {
        const std::string& url = endpoint.base_url;
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw EndpointUnavailable("endpoint URL needs a scheme: '" + url + "'");
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

        httplib::Client client(origin);
        if (!client.is_valid()) throw EndpointUnavailable("unsupported endpoint URL '" + url + "'");
        const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        httplib::Headers headers;
        if (const std::string key = llm_api_key(endpoint); !key.empty()) {
            headers.emplace("Authorization", "Bearer " + key);
        }
        auto res = client.Post(prefix + "/chat/completions", headers, request.dump(), "application/json");
        if (!res) throw EndpointUnavailable("request to '" + url + "' failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw EndpointUnavailable("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        return res->body;
    };
}

} // namespace gsscene
