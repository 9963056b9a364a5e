#include "support.hpp"

#include <gtest/gtest.h>
#include <png.h>

using namespace gstest;

namespace {

/// Camera at the world origin looking down +z.
Camera axis_camera(int w, int h, double f) {
    Camera cam;
    cam.width = w;
    cam.height = h;
    cam.fx = cam.fy = f;
    cam.cx = w / 2;
    cam.cy = h / 2;
    return cam;
}

GaussianCloud one(const Vec3& p, double sigma, const Vec3& color, double alpha) {
    GaussianCloud c;
    c.push_back(p, Vec3::Constant(sigma), Quaternion::identity(), color, alpha);
    return c;
}

GaussianCloud random_scene(Rng& rng, std::size_t n) {
    GaussianCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(3, 6)), random_vec(rng, 0.02, 0.4),
                    random_quat(rng), random_vec(rng, 0, 1), rng.uniform(0.1, 1.0));
    }
    return c;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST(Project, PrincipalPointAndIsotropicCovariance) {
    const Camera cam = axis_camera(64, 48, 80.0);
    const double d = 4.0, sigma = 0.2;
    const auto p = project(Vec3(0, 0, d), sigma * sigma * Mat3::Identity(), cam);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->mean, Vec2(cam.cx, cam.cy));
    EXPECT_DOUBLE_EQ(p->depth, d);
    const double expected = std::pow(cam.fx * sigma / d, 2) + kScreenDilation;
    EXPECT_NEAR(p->cov(0, 0), expected, 1e-9);
    EXPECT_NEAR(p->cov(1, 1), expected, 1e-9);
    EXPECT_NEAR(p->cov(0, 1), 0.0, 1e-9);
    EXPECT_EQ(p->cov(0, 1), p->cov(1, 0));
}

TEST(Project, CullsOutsideClipRange) {
    const Camera cam = axis_camera(32, 32, 40.0);
    EXPECT_FALSE(project(Vec3(0, 0, -1), Mat3::Identity(), cam));
    EXPECT_FALSE(project(Vec3(0, 0, 0.001), Mat3::Identity(), cam));
    EXPECT_FALSE(project(Vec3(0, 0, 5000), Mat3::Identity(), cam));
    EXPECT_TRUE(project(Vec3(0, 0, 1), Mat3::Identity(), cam));
}

TEST(Render, EmptySceneIsBackground) {
    const Camera cam = axis_camera(40, 30, 50.0);
    const Vec3 bg(0.1, 0.2, 0.3);
    const RenderOutput r = render(GaussianCloud{}, cam, bg);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            EXPECT_EQ(r.pixel(x, y), bg);
            EXPECT_EQ(r.alpha_at(x, y), 0.0);
            EXPECT_EQ(r.depth_at(x, y), 0.0);
        }
    }
}

TEST(Render, SingleSplatMatchesAnalyticEvaluation) {
    const Camera cam = axis_camera(64, 64, 100.0);
    const double d = 5.0, sigma = 0.2;
    const Vec3 color(0.9, 0.3, 0.1), bg(0, 0, 0);
    const RenderOutput r = render(one(Vec3(0, 0, d), sigma, color, 1.0), cam, bg);
    const double var = std::pow(cam.fx * sigma / d, 2) + 0.3;
    double peak = 0.0;
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const double r2 = std::pow(x - cam.cx, 2) + std::pow(y - cam.cy, 2);
            const double m2 = r2 / var;
            const double g = m2 <= 9.0 ? std::exp(-0.5 * m2) : 0.0;
            EXPECT_NEAR(r.alpha_at(x, y), g, 1e-3);
            EXPECT_LT(max_abs_diff(r.pixel(x, y), g * color), 1e-3);
            EXPECT_NEAR(r.depth_at(x, y), g > 0 ? d : 0.0, 1e-9);
            peak = std::max(peak, r.alpha_at(x, y));
        }
    }
    EXPECT_EQ(peak, r.alpha_at(32, 32));
    // radial symmetry about the principal point
    for (int dy = -10; dy <= 10; ++dy) {
        for (int dx = -10; dx <= 10; ++dx) {
            EXPECT_NEAR(r.alpha_at(32 + dx, 32 + dy), r.alpha_at(32 - dy, 32 + dx), 1e-12);
        }
    }
}

TEST(Render, NearOpaqueSplatOccludesFar) {
    const Camera cam = axis_camera(32, 32, 60.0);
    GaussianCloud c = one(Vec3(0, 0, 6), 0.5, Vec3(0, 1, 0), 1.0);           // far green
    c.push_back(Vec3(0, 0, 3), Vec3::Constant(0.5), Quaternion::identity(), Vec3(1, 0, 0), 1.0); // near red
    const RenderOutput both = render(c, cam, Vec3::Ones());
    EXPECT_LT(max_abs_diff(both.pixel(16, 16), Vec3(1, 0, 0)), 1e-9);
    const RenderOutput far_only = render(one(Vec3(0, 0, 6), 0.5, Vec3(0, 1, 0), 1.0), cam, Vec3::Ones());
    EXPECT_LT(max_abs_diff(far_only.pixel(16, 16), Vec3(0, 1, 0)), 1e-9);
}

TEST(Render, TiledEqualsBruteForce) {
    Rng rng(34);
    const Camera cam = axis_camera(128, 128, 120.0);
    for (int scene = 0; scene < 20; ++scene) {
        const GaussianCloud c = random_scene(rng, 10);
        const RenderOutput tiled = render(c, cam, Vec3(0.2, 0.3, 0.4));
        const RenderOutput brute = render(c, cam, Vec3(0.2, 0.3, 0.4), RenderOptions{1});
        EXPECT_LE(max_diff(tiled.rgb, brute.rgb), 1e-6);
        EXPECT_LE(max_diff(tiled.alpha, brute.alpha), 1e-6);
        EXPECT_LE(max_diff(tiled.depth, brute.depth), 1e-6);
        const RenderOutput odd = render(c, cam, Vec3(0.2, 0.3, 0.4), RenderOptions{7});
        EXPECT_LE(max_diff(odd.rgb, brute.rgb), 1e-6);
    }
}

TEST(Render, PermutationInvariantAtDistinctDepths) {
    Rng rng(35);
    const Camera cam = axis_camera(64, 64, 60.0);
    for (int scene = 0; scene < 10; ++scene) {
        const GaussianCloud c = random_scene(rng, 25);
        GaussianCloud rev;
        for (std::size_t i = c.size(); i-- > 0;) rev.push_back_from(c, i);
        const RenderOutput a = render(c, cam, Vec3::Zero());
        const RenderOutput b = render(rev, cam, Vec3::Zero());
        EXPECT_EQ(a.rgb, b.rgb);
        EXPECT_EQ(a.alpha, b.alpha);
        EXPECT_EQ(a.depth, b.depth);
    }
}

TEST(Render, EnergyBounds) {
    Rng rng(36);
    const Camera cam = axis_camera(48, 48, 50.0);
    for (int scene = 0; scene < 10; ++scene) {
        GaussianCloud c = random_scene(rng, 60);
        const RenderOutput r = render(c, cam, random_vec(rng, 0, 1));
        for (std::size_t i = 0; i < r.alpha.size(); ++i) {
            EXPECT_GE(r.alpha[i], 0.0);
            EXPECT_LE(r.alpha[i], 1.0);
            EXPECT_EQ(r.alpha[i] == 0.0, r.depth[i] == 0.0);
        }
        for (double v : r.rgb) {
            EXPECT_GE(v, -1e-12);
            EXPECT_LE(v, 1.0 + 1e-12);
        }
    }
}

TEST(Render, DoublingResolutionDoublesFootprint) {
    Rng rng(37);
    for (int i = 0; i < 50; ++i) {
        const Camera small = axis_camera(64, 64, 80.0);
        Camera big = axis_camera(128, 128, 160.0);
        // Footprints of several pixels, so the fixed low-pass dilation is a
        // small fraction of the projected covariance at either resolution.
        const Vec3 center(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(2, 4));
        const Mat3 sigma = covariance(random_vec(rng, 0.25, 0.5), random_quat(rng));
        const Vec2 a = ellipse_axes(project(center, sigma, small)->cov);
        const Vec2 b = ellipse_axes(project(center, sigma, big)->cov);
        EXPECT_NEAR(b[0] / a[0], 2.0, 0.04);
        EXPECT_NEAR(b[1] / a[1], 2.0, 0.04);
    }
}

TEST(Render, EarlyTerminationBehindOpaqueStack) {
    const Camera cam = axis_camera(16, 16, 30.0);
    GaussianCloud c;
    for (int i = 0; i < 20; ++i) {
        c.push_back(Vec3(0, 0, 2 + 0.1 * i), Vec3::Constant(1.0), Quaternion::identity(), Vec3(0, 0, 1), 0.99);
    }
    c.push_back(Vec3(0, 0, 10), Vec3::Constant(1.0), Quaternion::identity(), Vec3(1, 0, 0), 1.0);
    const RenderOutput r = render(c, cam, Vec3::Zero());
    EXPECT_EQ(r.pixel(8, 8).x(), 0.0); // the red splat is never reached
    EXPECT_GT(r.alpha_at(8, 8), 1.0 - kMinTransmittance);
}

TEST(Camera, JsonForms) {
    const Camera la = camera_from_json(nlohmann::json::parse(
        R"({"width": 80, "height": 60, "fov_y_deg": 60, "look_at": {"eye": [0, -5, 0], "target": [0, 0, 0]}})"));
    EXPECT_EQ(la.width, 80);
    EXPECT_LT(max_abs_diff(la.position(), Vec3(0, -5, 0)), 1e-12);
    EXPECT_LT(max_abs_diff(la.to_camera(Vec3::Zero()), Vec3(0, 0, 5)), 1e-12);
    // world +z (up) appears toward the top of the image (negative camera y)
    EXPECT_LT(la.to_camera(Vec3(0, 0, 1)).y(), 0.0);
    EXPECT_NEAR(la.fy, 30.0 / std::tan(M_PI / 6), 1e-9);

    const Camera back = camera_from_json(camera_to_json(la));
    EXPECT_EQ(back.fx, la.fx);
    EXPECT_LT(quat_distance(back.rotation, la.rotation), 1e-15);
    EXPECT_EQ(back.translation, la.translation);
    EXPECT_THROW(camera_from_json(nlohmann::json::parse(R"({"width": 10, "height": 10})")), InvariantViolation);
    EXPECT_THROW(camera_from_json(nlohmann::json::parse(R"({"look_at": {"eye": [1, 2]}})")), SchemaViolation);
}

TEST(ImageIo, PngRoundTrip) {
    Rng rng(38);
    const Camera cam = axis_camera(40, 30, 40.0);
    const RenderOutput r = render(random_scene(rng, 20), cam, Vec3(0.5, 0.5, 0.5));
    const auto dir = scratch_dir("png");
    write_render(r, dir);
    const RgbImage img = read_rgb_png(dir / "rgb.png");
    ASSERT_EQ(img.width, 40);
    ASSERT_EQ(img.height, 30);
    for (std::size_t i = 0; i < r.rgb.size(); ++i) EXPECT_NEAR(img.rgb[i], r.rgb[i], 0.5 / 255.0 + 1e-12);

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    ASSERT_TRUE(png_image_begin_read_from_file(&image, (dir / "depth.png").c_str()));
    image.format = PNG_FORMAT_LINEAR_Y;
    std::vector<std::uint16_t> px(image.width * image.height);
    ASSERT_TRUE(png_image_finish_read(&image, nullptr, px.data(), 0, nullptr));
    const auto side = nlohmann::json::parse(std::ifstream(dir / "depth.json"));
    const double lo = side["depth_min"], hi = side["depth_max"];
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (r.alpha[i] == 0.0) {
            EXPECT_EQ(px[i], 0);
        } else {
            ASSERT_GE(px[i], 1);
            const double decoded = lo + (px[i] - 1) / 65534.0 * (hi - lo);
            EXPECT_NEAR(decoded, r.depth[i], (hi - lo) / 65534.0);
        }
    }
}

TEST(ImageIo, Base64) {
    EXPECT_EQ(base64_encode({}), "");
    EXPECT_EQ(base64_encode({'f'}), "Zg==");
    EXPECT_EQ(base64_encode({'f', 'o'}), "Zm8=");
    EXPECT_EQ(base64_encode({'f', 'o', 'o', 'b', 'a', 'r'}), "Zm9vYmFy");
}
