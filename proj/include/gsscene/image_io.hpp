#pragma once

// PNG encoding of render outputs: 8-bit RGB color, 16-bit grayscale depth
// with a JSON sidecar describing the linear depth mapping.

#include "gsscene/error.hpp"
#include "gsscene/renderer.hpp"

#include <png.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace gsscene {

namespace detail {

inline std::vector<unsigned char> encode_png(const void* pixels, int width, int height, png_uint_32 format) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
        throw Error("ImageEncodeError", std::string("PNG sizing failed: ") + image.message);
    }
    std::vector<unsigned char> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
        throw Error("ImageEncodeError", std::string("PNG encoding failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

inline std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace detail

inline std::vector<unsigned char> encode_rgb_png(const RenderOutput& r) {
    std::vector<std::uint8_t> px(r.rgb.size());
    std::transform(r.rgb.begin(), r.rgb.end(), px.begin(), detail::to_u8);
    return detail::encode_png(px.data(), r.width, r.height, PNG_FORMAT_RGB);
}

/// Linear mapping from stored 16-bit values back to depth.
struct DepthRange {
    double min = 0.0;
    double max = 0.0;

    nlohmann::json to_json() const {
        return {{"encoding", "linear16"},
                {"empty_value", 0},
                {"min_value", 1},
                {"max_value", 65535},
                {"depth_min", min},
                {"depth_max", max}};
    }
};

/// Pixels with no coverage store 0; covered pixels map [min, max] onto
/// [1, 65535].
inline std::vector<unsigned char> encode_depth_png(const RenderOutput& r, DepthRange* range_out = nullptr) {
    DepthRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < r.depth.size(); ++i) {
        if (r.alpha[i] > 0.0) {
            range.min = std::min(range.min, r.depth[i]);
            range.max = std::max(range.max, r.depth[i]);
        }
    }
    if (!std::isfinite(range.min)) range = {0.0, 0.0};
    const double span = range.max - range.min;
    std::vector<std::uint16_t> px(r.depth.size(), 0);
    for (std::size_t i = 0; i < r.depth.size(); ++i) {
        if (!(r.alpha[i] > 0.0)) continue;
        const double t = span > 0.0 ? (r.depth[i] - range.min) / span : 0.0;
        px[i] = static_cast<std::uint16_t>(1 + std::lround(std::clamp(t, 0.0, 1.0) * 65534.0));
    }
    if (range_out) *range_out = range;
    // The simplified API expects 16-bit samples in host order.
    return detail::encode_png(px.data(), r.width, r.height, PNG_FORMAT_LINEAR_Y);
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileNotFound("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Writes rgb.png, depth.png and depth.json into `dir`.
inline void write_render(const RenderOutput& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_bytes(dir / "rgb.png", encode_rgb_png(r));
    DepthRange range;
    write_bytes(dir / "depth.png", encode_depth_png(r, &range));
    std::ofstream side(dir / "depth.json", std::ios::trunc);
    side << range.to_json().dump(2) << "\n";
}

/// 8-bit RGB image with values in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;
};

inline RgbImage read_rgb_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw FileNotFound("cannot read PNG '" + path.string() + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
        throw UnknownLayout("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    RgbImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.rgb.resize(px.size());
    std::transform(px.begin(), px.end(), out.rgb.begin(), [](std::uint8_t v) { return v / 255.0; });
    return out;
}

inline std::string base64_encode(const std::vector<unsigned char>& bytes) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t v = bytes[i] << 16;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

} // namespace gsscene
