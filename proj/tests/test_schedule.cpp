#include "support.hpp"

#include <gtest/gtest.h>

using namespace gstest;

TEST(Schedule, DeriveBetaExamples) {
    EXPECT_EQ(derive_beta(Vec3(2, 2, 2), Vec3(2, 2, 2)), Vec3::Zero());
    EXPECT_EQ(derive_beta(Vec3(1, 1, 1), Vec3(2, 2, 2)), Vec3::Ones());
    EXPECT_EQ(derive_beta(Vec3(1, 2, 4), Vec3(2, 2, 2)), Vec3(1, 0, -0.5));
    EXPECT_THROW(derive_beta(GaussianCloud{}, Vec3::Ones()), EmptyCloud);
}

TEST(Schedule, DeriveBetaFromCloudUsesExtent) {
    GaussianCloud c;
    c.push_back(Vec3::Zero(), Vec3::Constant(0.1), Quaternion::identity(), Vec3::Zero(), 1.0);
    const Vec3 beta = derive_beta(c, Vec3::Constant(1.2));
    EXPECT_LT(max_abs_diff(beta, Vec3::Ones()), 1e-12);
}

TEST(Schedule, StretchFactorBranches) {
    ScaleSchedule s{100, 200, Vec3::Ones()};
    for (std::int64_t k : {0, 50, 100}) EXPECT_EQ(stretch_factor(k, s), Vec3::Ones());
    EXPECT_EQ(stretch_factor(300, s), Vec3::Constant(2.0));
    EXPECT_EQ(stretch_factor(10000, s), Vec3::Constant(2.0));
    EXPECT_EQ(stretch_factor(150, s), Vec3::Constant(1.25));
    EXPECT_EQ(stretch_factor(200, s), Vec3::Constant(1.5));
}

TEST(Schedule, PiecewiseLinearAndMonotone) {
    Rng rng(18);
    for (int trial = 0; trial < 100; ++trial) {
        ScaleSchedule s{static_cast<std::int64_t>(rng.below(50)), 1 + static_cast<std::int64_t>(rng.below(100)),
                        random_vec(rng, -0.9, 3.0)};
        ASSERT_TRUE(s.valid());
        Vec3 prev = stretch_factor(0, s);
        for (std::int64_t k = 1; k < s.warmup + s.saturation + 20; ++k) {
            const Vec3 f = stretch_factor(k, s);
            for (int a = 0; a < 3; ++a) {
                if (s.beta[a] >= 0) {
                    EXPECT_GE(f[a], prev[a]);
                }
                if (s.beta[a] <= 0) {
                    EXPECT_LE(f[a], prev[a]);
                }
                // bounded step: slope |beta|/gamma
                EXPECT_LE(std::abs(f[a] - prev[a]), std::abs(s.beta[a]) / s.saturation + 1e-12);
            }
            prev = f;
        }
    }
}

TEST(Schedule, ApplyStretchExamples) {
    GaussianCloud c;
    c.push_back(Vec3(1, 0, 0), Vec3::Constant(0.1), Quaternion::identity(), Vec3::Zero(), 1.0);
    c.push_back(Vec3(-1, 0, 0), Vec3::Constant(0.1), Quaternion::identity(), Vec3::Zero(), 1.0);
    const GaussianCloud same = apply_stretch(c, Vec3::Ones());
    EXPECT_EQ(same.p, c.p);
    EXPECT_EQ(same.s, c.s);
    const GaussianCloud wide = apply_stretch(c, Vec3(2, 1, 1));
    EXPECT_EQ(wide.p[0], Vec3(2, 0, 0));
    EXPECT_EQ(wide.p[1], Vec3(-2, 0, 0));
    EXPECT_EQ(wide.s[0], Vec3(0.2, 0.1, 0.1));
    EXPECT_EQ(wide.q, c.q);
    EXPECT_EQ(wide.c, c.c);
    EXPECT_EQ(wide.alpha, c.alpha);
    EXPECT_THROW(apply_stretch(GaussianCloud{}, Vec3::Ones()), EmptyCloud);
}

TEST(Schedule, StretchThenInverseIsIdentity) {
    Rng rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        const GaussianCloud c = random_cloud(rng, 30, 3.0);
        const Vec3 f = random_vec(rng, 0.1, 10.0);
        const GaussianCloud back = apply_stretch(apply_stretch(c, f), f.cwiseInverse());
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_LT(max_abs_diff(back.p[i], c.p[i]), 1e-6);
            EXPECT_LT(max_abs_diff(back.s[i], c.s[i]), 1e-6);
        }
    }
}

TEST(Schedule, FullStretchReachesTargetExtent) {
    Rng rng(20);
    auto check = [&](const GaussianCloud& c, const Vec3& whl, double tol, const char* tag) {
        const ScaleSchedule s{10, 20, derive_beta(c, whl)};
        const Extent e = extent(apply_stretch(c, stretch_factor(s.warmup + s.saturation, s)));
        for (int a = 0; a < 3; ++a) EXPECT_LT(std::abs(e.size[a] - whl[a]) / whl[a], tol) << "axis " << a << " case " << tag;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 whl = random_vec(rng, 0.5, 8.0);
        // Axis-aligned Gaussians of any size: the stretched box is exact.
        GaussianCloud aligned = random_cloud(rng, 100, rng.uniform(0.2, 3.0));
        for (auto& q : aligned.q) q = Quaternion::identity();
        check(aligned, whl, 1e-9, "aligned");
        // Rotated Gaussians small next to the cloud. The residual is bounded
        // by the padding fraction times the stretch anisotropy (up to 16 here).
        const double spread = rng.uniform(0.5, 3.0);
        check(random_cloud(rng, 100, spread, 1e-4 * spread, 1e-3 * spread), whl, 0.10, "rotated");
        // Clouds produced by the two initializers.
        InitSpec spec;
        spec.method = trial % 2 ? InitMethod::UniformBox : InitMethod::SphereSurface;
        spec.count = 50 + static_cast<long long>(rng.below(200));
        const GaussianCloud init = spec.method == InitMethod::UniformBox
                                       ? sparse_init(spec, random_vec(rng, 0.5, 8.0), trial)
                                       : sphere_surface_init(spec, trial);
        check(init, whl, 0.10, "init");
    }
}
