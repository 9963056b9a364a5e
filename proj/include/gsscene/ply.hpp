#pragma once

// Binary little-endian PLY in the layout used by common splat viewers:
// x y z, f_dc_0..2 (degree-0 SH coefficient), opacity (logit),
// scale_0..2 (log), rot_0..3 (w first, unnormalized).

#include "gsscene/error.hpp"
#include "gsscene/gaussians.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace gsscene {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

/// Degree-0 spherical-harmonic basis constant: rgb = 0.5 + kSH0 * f_dc.
inline constexpr double kSH0 = 0.28209479177387814;
/// Opacities are clamped into [eps, 1 - eps] before taking the logit.
inline constexpr double kOpacityEps = 1e-7;

namespace detail {

inline std::size_t ply_type_size(const std::string& t) {
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},   {"uchar", 1},  {"int8", 1},   {"uint8", 1},  {"short", 2},   {"ushort", 2},
        {"int16", 2},  {"uint16", 2}, {"int", 4},    {"uint", 4},   {"int32", 4},   {"uint32", 4},
        {"float", 4},  {"float32", 4}, {"double", 8}, {"float64", 8}};
    auto it = sizes.find(t);
    return it == sizes.end() ? 0 : it->second;
}

inline double ply_read_scalar(const std::string& t, const unsigned char* src) {
    auto load = [src]<typename T>(T) {
        T v;
        std::memcpy(&v, src, sizeof(T));
        return static_cast<double>(v);
    };
    if (t == "float" || t == "float32") return load(float{});
    if (t == "double" || t == "float64") return load(double{});
    if (t == "char" || t == "int8") return load(std::int8_t{});
    if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
    if (t == "short" || t == "int16") return load(std::int16_t{});
    if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
    if (t == "int" || t == "int32") return load(std::int32_t{});
    return load(std::uint32_t{});
}

struct PlyProperty {
    std::string name;
    std::string type;
    std::size_t offset = 0;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::size_t stride = 0;
    std::vector<PlyProperty> props;
};

/// Decoders applied by the loader. The encoder inverts them.
inline double decode_color(double f) { return 0.5 + kSH0 * f; }
inline double decode_opacity(double f) { return 1.0 / (1.0 + std::exp(-f)); }
inline double decode_scale(double f) { return std::exp(f); }

/// Rounds `raw` to float, then nudges by a few ulps to find a float that
/// decodes back to exactly `value` when one exists. This makes re-saving a
/// loaded cloud reproduce the original payload bit for bit.
template <typename Decode>
float encode_exact(double raw, double value, Decode decode) {
    const float base = static_cast<float>(raw);
    if (decode(static_cast<double>(base)) == value) return base;
    float up = base, down = base;
    for (int step = 0; step < 4; ++step) {
        up = std::nextafter(up, std::numeric_limits<float>::infinity());
        down = std::nextafter(down, -std::numeric_limits<float>::infinity());
        if (decode(static_cast<double>(up)) == value) return up;
        if (decode(static_cast<double>(down)) == value) return down;
    }
    return base;
}

} // namespace detail

inline void save_ply(const GaussianCloud& cloud, std::ostream& out) {
    if (auto err = check_cloud(cloud); !err.empty()) throw InvariantViolation("cannot save cloud: " + err);
    static constexpr std::array<const char*, 14> names = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                                          "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                                          "rot_0",   "rot_1",   "rot_2",   "rot_3"};
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << "\n";
    for (const char* n : names) header << "property float " << n << "\n";
    header << "end_header\n";

    std::vector<float> payload;
    payload.reserve(cloud.size() * names.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double a = std::clamp(cloud.alpha[i], kOpacityEps, 1.0 - kOpacityEps);
        for (int k = 0; k < 3; ++k) payload.push_back(static_cast<float>(cloud.p[i][k]));
        for (int k = 0; k < 3; ++k) {
            payload.push_back(detail::encode_exact((cloud.c[i][k] - 0.5) / kSH0, cloud.c[i][k], detail::decode_color));
        }
        payload.push_back(detail::encode_exact(std::log(a / (1.0 - a)), a, detail::decode_opacity));
        for (int k = 0; k < 3; ++k) {
            payload.push_back(detail::encode_exact(std::log(cloud.s[i][k]), cloud.s[i][k], detail::decode_scale));
        }
        for (double v : {cloud.q[i].w, cloud.q[i].x, cloud.q[i].y, cloud.q[i].z}) payload.push_back(static_cast<float>(v));
    }
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

inline void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileNotFound("cannot open '" + path.string() + "' for writing");
    save_ply(cloud, out);
    if (!out) throw FileNotFound("failed writing '" + path.string() + "'");
}

inline std::string encode_ply(const GaussianCloud& cloud) {
    std::ostringstream out(std::ios::binary);
    save_ply(cloud, out);
    return out.str();
}

inline GaussianCloud load_ply(std::istream& in, const std::string& name = "<stream>");

inline GaussianCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open '" + path.string() + "'");
    return load_ply(in, path.string());
}

inline GaussianCloud load_ply(std::istream& in, const std::string& name) {
    std::string line;
    std::getline(in, line);
    if (line != "ply" && line != "ply\r") throw UnknownLayout("'" + name + "' is not a PLY file");

    std::vector<detail::PlyElement> elements;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "end_header") {
            header_done = true;
            break;
        }
        if (kw == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian") throw UnknownLayout("unsupported PLY format '" + fmt + "'");
        } else if (kw == "element") {
            detail::PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (elements.empty()) throw UnknownLayout("property before any element");
            std::string type, prop;
            ls >> type >> prop;
            if (type == "list") throw UnknownLayout("list properties are not supported");
            const std::size_t sz = detail::ply_type_size(type);
            if (sz == 0) throw UnknownLayout("unknown property type '" + type + "'");
            auto& e = elements.back();
            e.props.push_back({prop, type, e.stride});
            e.stride += sz;
        }
        // comment / obj_info lines are ignored
    }
    if (!header_done) throw UnknownLayout("PLY header is not terminated");

    std::size_t skip_bytes = 0;
    const detail::PlyElement* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
        skip_bytes += e.count * e.stride;
    }
    if (!vertex) throw UnknownLayout("PLY has no vertex element");

    static constexpr std::array<const char*, 14> required = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                                             "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                                             "rot_0",   "rot_1",   "rot_2",   "rot_3"};
    std::array<const detail::PlyProperty*, 14> props{};
    for (std::size_t k = 0; k < required.size(); ++k) {
        for (const auto& p : vertex->props) {
            if (p.name == required[k]) props[k] = &p;
        }
        if (!props[k]) throw UnknownLayout(std::string("PLY vertex element lacks attribute '") + required[k] + "'");
    }

    in.seekg(static_cast<std::streamoff>(skip_bytes), std::ios::cur);
    std::vector<unsigned char> data(vertex->count * vertex->stride);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (static_cast<std::size_t>(in.gcount()) != data.size()) throw UnknownLayout("PLY payload is truncated");

    GaussianCloud cloud;
    cloud.reserve(vertex->count);
    double row[14];
    for (std::size_t i = 0; i < vertex->count; ++i) {
        const unsigned char* base = data.data() + i * vertex->stride;
        for (std::size_t k = 0; k < required.size(); ++k) {
            row[k] = detail::ply_read_scalar(props[k]->type, base + props[k]->offset);
            if (!std::isfinite(row[k])) {
                throw ValueOutOfDomain("non-finite '" + std::string(required[k]) + "' at vertex " + std::to_string(i));
            }
        }
        Quaternion q{row[10], row[11], row[12], row[13]};
        if (q.norm() < 1e-12) throw ValueOutOfDomain("zero rotation at vertex " + std::to_string(i));
        // Rotations already unit to within tolerance are kept as stored, so
        // float quantization alone never triggers a renormalization.
        if (!q.is_unit()) q = q.normalized();
        Vec3 color(detail::decode_color(row[3]), detail::decode_color(row[4]), detail::decode_color(row[5]));
        cloud.push_back(Vec3(row[0], row[1], row[2]),
                        Vec3(detail::decode_scale(row[7]), detail::decode_scale(row[8]), detail::decode_scale(row[9])),
                        q, color.cwiseMax(0.0).cwiseMin(1.0), detail::decode_opacity(row[6]));
        if (!(cloud.s.back().array() > 0.0).all() || !cloud.s.back().allFinite()) {
            throw ValueOutOfDomain("scale out of range at vertex " + std::to_string(i));
        }
    }
    return cloud;
}

} // namespace gsscene
