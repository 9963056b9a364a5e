#pragma once

// Tile-based CPU splatting rasterizer.
//
// Gaussians are projected with the EWA approximation, sorted front to back
// (ties broken by index), binned into square tiles by the bounding box of
// their 3-sigma screen ellipse and composited per pixel. A Gaussian
// contributes to a pixel only inside that ellipse, so binning is exact and
// the tile size never changes the result.

#include "gsscene/gaussians.hpp"
#include "gsscene/quaternion.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace gsscene {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates
/// (x right, y down, z forward); pixel (u, v) samples the image plane at
/// integer coordinates.
struct Camera {
    double fx = 100.0;
    double fy = 100.0;
    double cx = 50.0;
    double cy = 50.0;
    Quaternion rotation;
    Vec3 translation = Vec3::Zero();
    int width = 100;
    int height = 100;
    double near = 0.01;
    double far = 1000.0;

    bool valid() const noexcept {
        return fx > 0.0 && fy > 0.0 && near > 0.0 && near < far && width >= 1 && height >= 1 && rotation.is_unit();
    }

    Vec3 to_camera(const Vec3& world) const { return quat_to_matrix(rotation) * world + translation; }

    Vec3 position() const { return -(quat_to_matrix(rotation).transpose() * translation); }

    /// Camera at `eye` looking at `target`; `fov_y_deg` sets fy = fx.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg, int width,
                          int height) {
        const Vec3 forward = (target - eye).normalized();
        Vec3 right = forward.cross(up);
        if (right.norm() < 1e-9) right = forward.cross(std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
        right.normalize();
        const Vec3 down = forward.cross(right);
        Mat3 r;
        r.row(0) = right;
        r.row(1) = down;
        r.row(2) = forward;
        Camera cam;
        cam.width = width;
        cam.height = height;
        cam.fy = 0.5 * height / std::tan(0.5 * fov_y_deg * 3.14159265358979323846 / 180.0);
        cam.fx = cam.fy;
        cam.cx = 0.5 * width;
        cam.cy = 0.5 * height;
        cam.rotation = matrix_to_quat(r);
        cam.translation = -(quat_to_matrix(cam.rotation) * eye);
        return cam;
    }
};

/// Low-pass term added to every projected covariance (pixels²).
inline constexpr double kScreenDilation = 0.3;
inline constexpr double kCutoffSigmas = 3.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr int kDefaultTileSize = 16;

struct Projection {
    Vec2 mean;
    Mat2 cov;
    double depth = 0.0;
};

/// EWA projection of a 3D Gaussian; nullopt when the center is outside
/// (near, far).
inline std::optional<Projection> project(const Vec3& center, const Mat3& sigma, const Camera& cam) {
    const Mat3 w = quat_to_matrix(cam.rotation);
    const Vec3 t = w * center + cam.translation;
    if (!(t.z() > cam.near && t.z() < cam.far)) return std::nullopt;
    const double iz = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * t.y() * iz * iz;
    const Eigen::Matrix<double, 2, 3> m = j * w;
    Mat2 cov = m * sigma * m.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov += kScreenDilation * Mat2::Identity();
    return Projection{Vec2(cam.fx * t.x() * iz + cam.cx, cam.fy * t.y() * iz + cam.cy), cov, t.z()};
}

/// Semi-axes of the 3-sigma screen ellipse, major first.
inline Vec2 ellipse_axes(const Mat2& cov) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(cov);
    const Vec2 ev = es.eigenvalues();
    return {kCutoffSigmas * std::sqrt(ev[1]), kCutoffSigmas * std::sqrt(ev[0])};
}

struct RenderOutput {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;   // row-major, 3 per pixel
    std::vector<double> depth; // row-major
    std::vector<double> alpha; // row-major

    Vec3 pixel(int x, int y) const {
        const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
        return {rgb[o], rgb[o + 1], rgb[o + 2]};
    }
    double alpha_at(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
    double depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
};

struct RenderOptions {
    int tile_size = kDefaultTileSize;
};

/// A projected Gaussian ready for compositing.
struct Splat {
    Vec2 mean;
    double conic_xx = 0.0;
    double conic_xy = 0.0;
    double conic_yy = 0.0;
    double half_w = 0.0; // 3-sigma bounding box half extents in pixels
    double half_h = 0.0;
    double depth = 0.0;
    double opacity = 0.0;
    Vec3 color;
    std::size_t index = 0;
};

/// Projects and depth-sorts a cloud (ties by index). Culled Gaussians are
/// dropped.
inline std::vector<Splat> prepare_splats(const GaussianCloud& cloud, const Camera& cam) {
    std::vector<Splat> splats;
    splats.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto proj = project(cloud.p[i], covariance(cloud.s[i], cloud.q[i]), cam);
        if (!proj) continue;
        const Mat2 conic = proj->cov.inverse();
        Splat s;
        s.mean = proj->mean;
        s.conic_xx = conic(0, 0);
        s.conic_xy = 0.5 * (conic(0, 1) + conic(1, 0));
        s.conic_yy = conic(1, 1);
        s.half_w = kCutoffSigmas * std::sqrt(proj->cov(0, 0));
        s.half_h = kCutoffSigmas * std::sqrt(proj->cov(1, 1));
        s.depth = proj->depth;
        s.opacity = cloud.alpha[i];
        s.color = cloud.c[i];
        s.index = i;
        splats.push_back(s);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
    });
    return splats;
}

/// Opacity-weighted kernel value of `s` at pixel (x, y), zero outside the
/// 3-sigma ellipse.
inline double splat_weight(const Splat& s, double x, double y) {
    const double dx = x - s.mean.x();
    const double dy = y - s.mean.y();
    const double m2 = s.conic_xx * dx * dx + 2.0 * s.conic_xy * dx * dy + s.conic_yy * dy * dy;
    if (m2 > kCutoffSigmas * kCutoffSigmas) return 0.0;
    return s.opacity * std::exp(-0.5 * m2);
}

inline RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Vec3& background,
                           const RenderOptions& opts = {}) {
    if (!cam.valid()) throw PreconditionError("invalid camera");
    if (opts.tile_size < 1) throw PreconditionError("tile size must be positive");
    RenderOutput out;
    out.width = cam.width;
    out.height = cam.height;
    const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;
    out.rgb.assign(3 * npix, 0.0);
    out.depth.assign(npix, 0.0);
    out.alpha.assign(npix, 0.0);

    const std::vector<Splat> splats = prepare_splats(cloud, cam);

    const int ts = opts.tile_size;
    const int tiles_x = (cam.width + ts - 1) / ts;
    const int tiles_y = (cam.height + ts - 1) / ts;
    std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (std::size_t k = 0; k < splats.size(); ++k) {
        const Splat& s = splats[k];
        const double x0 = std::ceil(s.mean.x() - s.half_w);
        const double x1 = std::floor(s.mean.x() + s.half_w);
        const double y0 = std::ceil(s.mean.y() - s.half_h);
        const double y1 = std::floor(s.mean.y() + s.half_h);
        if (x1 < 0.0 || y1 < 0.0 || x0 > cam.width - 1 || y0 > cam.height - 1 || x0 > x1 || y0 > y1) continue;
        const int tx0 = static_cast<int>(std::max(0.0, x0)) / ts;
        const int tx1 = static_cast<int>(std::min<double>(cam.width - 1, x1)) / ts;
        const int ty0 = static_cast<int>(std::max(0.0, y0)) / ts;
        const int ty1 = static_cast<int>(std::min<double>(cam.height - 1, y1)) / ts;
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(
                static_cast<std::uint32_t>(k));
        }
    }

    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            const auto& bin = bins[static_cast<std::size_t>(ty) * tiles_x + tx];
            const int px_end = std::min(cam.width, (tx + 1) * ts);
            const int py_end = std::min(cam.height, (ty + 1) * ts);
            for (int py = ty * ts; py < py_end; ++py) {
                for (int px = tx * ts; px < px_end; ++px) {
                    double trans = 1.0;
                    Vec3 color = Vec3::Zero();
                    double depth = 0.0;
                    for (std::uint32_t k : bin) {
                        const Splat& s = splats[k];
                        const double a = splat_weight(s, px, py);
                        if (a <= 0.0) continue;
                        const double w = a * trans;
                        color += w * s.color;
                        depth += w * s.depth;
                        trans *= 1.0 - a;
                        if (trans < kMinTransmittance) break;
                    }
                    const std::size_t o = static_cast<std::size_t>(py) * cam.width + px;
                    const double acc = 1.0 - trans;
                    color += trans * background;
                    out.rgb[3 * o] = color.x();
                    out.rgb[3 * o + 1] = color.y();
                    out.rgb[3 * o + 2] = color.z();
                    out.alpha[o] = acc;
                    out.depth[o] = acc > 0.0 ? depth / acc : 0.0;
                }
            }
        }
    }
    return out;
}

inline nlohmann::json camera_to_json(const Camera& cam) {
    return {{"fx", cam.fx},
            {"fy", cam.fy},
            {"cx", cam.cx},
            {"cy", cam.cy},
            {"width", cam.width},
            {"height", cam.height},
            {"near", cam.near},
            {"far", cam.far},
            {"rotation", cam.rotation.to_array()},
            {"translation", {cam.translation.x(), cam.translation.y(), cam.translation.z()}}};
}

/// Accepts explicit intrinsics + pose, or a look_at block:
/// {"width", "height", "fov_y_deg", "look_at": {"eye", "target", "up"?}}.
inline Camera camera_from_json(const nlohmann::json& j) {
    auto num = [&](const char* key, double def) {
        auto it = j.find(key);
        if (it == j.end()) return def;
        if (!it->is_number()) throw SchemaViolation(std::string("/") + key, "expected a number");
        return it->get<double>();
    };
    auto vec = [](const nlohmann::json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 3) throw SchemaViolation(path, "expected 3 numbers");
        for (const auto& x : v) {
            if (!x.is_number()) throw SchemaViolation(path, "expected 3 numbers");
        }
        return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    };
    if (!j.is_object()) throw SchemaViolation("", "camera must be an object");
    const int width = static_cast<int>(num("width", 128));
    const int height = static_cast<int>(num("height", 128));
    Camera cam;
    if (auto la = j.find("look_at"); la != j.end()) {
        if (!la->is_object() || !la->contains("eye") || !la->contains("target")) {
            throw SchemaViolation("/look_at", "expected {eye, target, up?}");
        }
        const Vec3 up = la->contains("up") ? vec((*la)["up"], "/look_at/up") : Vec3(0.0, 0.0, 1.0);
        cam = Camera::look_at(vec((*la)["eye"], "/look_at/eye"), vec((*la)["target"], "/look_at/target"), up,
                              num("fov_y_deg", 50.0), width, height);
    } else {
        cam.width = width;
        cam.height = height;
        cam.fx = num("fx", 0.0);
        cam.fy = num("fy", 0.0);
        cam.cx = num("cx", 0.5 * width);
        cam.cy = num("cy", 0.5 * height);
        if (auto r = j.find("rotation"); r != j.end()) {
            if (!r->is_array() || r->size() != 4) throw SchemaViolation("/rotation", "expected 4 numbers");
            cam.rotation = Quaternion{(*r)[0].get<double>(), (*r)[1].get<double>(), (*r)[2].get<double>(),
                                      (*r)[3].get<double>()}
                               .normalized();
        }
        if (auto t = j.find("translation"); t != j.end()) cam.translation = vec(*t, "/translation");
    }
    cam.near = num("near", cam.near);
    cam.far = num("far", cam.far);
    if (!cam.valid()) throw InvariantViolation("camera parameters are invalid");
    return cam;
}

} // namespace gsscene
