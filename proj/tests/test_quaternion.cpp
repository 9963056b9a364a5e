#include "support.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <numbers>

using namespace gstest;

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 eigen_rotation(const Quaternion& q) {
    // Independent oracle: Eigen's own quaternion-to-matrix conversion.
    return Eigen::Quaterniond(q.w, q.x, q.y, q.z).toRotationMatrix();
}

} // namespace

TEST(Quaternion, IdentityTimesBIsB) {
    const Quaternion b = Quaternion::from_axis_angle(Vec3(1, 2, 3), 0.7);
    EXPECT_LT(quat_distance(quat_mul(Quaternion::identity(), b), b), 1e-15);
}

TEST(Quaternion, Z90TwiceIsZ180) {
    const Quaternion z90 = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
    const Quaternion r = quat_mul(z90, z90);
    EXPECT_LT(quat_distance(r, Quaternion{0, 0, 0, 1}), 1e-12);
    EXPECT_TRUE(quat_to_matrix(r).isApprox(quat_to_matrix(z90) * quat_to_matrix(z90), 1e-12));
}

TEST(Quaternion, NonCommutativeForPerpendicularAxes) {
    const Quaternion a = Quaternion::from_axis_angle(Vec3::UnitX(), kPi / 2);
    const Quaternion b = Quaternion::from_axis_angle(Vec3::UnitY(), kPi / 2);
    const Mat3 ab = quat_to_matrix(quat_mul(a, b));
    const Mat3 ba = quat_to_matrix(quat_mul(b, a));
    EXPECT_TRUE(ab.isApprox(eigen_rotation(a) * eigen_rotation(b), 1e-12));
    EXPECT_TRUE(ba.isApprox(eigen_rotation(b) * eigen_rotation(a), 1e-12));
    EXPECT_GT((ab - ba).cwiseAbs().maxCoeff(), 0.5);
}

TEST(Quaternion, MatrixExamples) {
    EXPECT_TRUE(quat_to_matrix(Quaternion::identity()).isIdentity(0.0));
    const double h = std::sqrt(2.0) / 2.0;
    const Vec3 mapped = quat_to_matrix(Quaternion{h, 0, 0, h}) * Vec3::UnitX();
    EXPECT_LT(max_abs_diff(mapped, Vec3::UnitY()), 1e-15);
    const Mat3 x180 = quat_to_matrix(Quaternion{0, 1, 0, 0});
    EXPECT_TRUE(x180.isApprox(Vec3(1, -1, -1).asDiagonal().toDenseMatrix(), 0.0));
}

TEST(Quaternion, RejectsNonUnit) {
    EXPECT_THROW(quat_to_matrix(Quaternion{2, 0, 0, 0}), NonUnitQuaternion);
    EXPECT_NO_THROW(quat_to_matrix(Quaternion{1.0 + 5e-7, 0, 0, 0}));
}

TEST(Quaternion, MatchesEigenOracleOnRandomInputs) {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const Quaternion a = random_quat(rng);
        const Quaternion b = random_quat(rng);
        EXPECT_LT((quat_to_matrix(a) - eigen_rotation(a)).cwiseAbs().maxCoeff(), 1e-12);
        const Mat3 composed = eigen_rotation(a) * eigen_rotation(b);
        EXPECT_LT((quat_to_matrix(quat_mul(a, b)) - composed).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Quaternion, AssociativeUnderMatrixOracle) {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const Quaternion a = random_quat(rng), b = random_quat(rng), c = random_quat(rng);
        const Mat3 left = quat_to_matrix(quat_mul(quat_mul(a, b), c));
        const Mat3 right = quat_to_matrix(quat_mul(a, quat_mul(b, c)));
        EXPECT_LT((left - right).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Quaternion, ProperRotation) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const Mat3 r = quat_to_matrix(random_quat(rng));
        EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    }
}

TEST(Quaternion, MatrixToQuatInvertsQuatToMatrix) {
    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        const Quaternion q = random_quat(rng);
        EXPECT_LT(quat_distance(matrix_to_quat(quat_to_matrix(q)), q), 1e-12);
    }
}

TEST(Quaternion, RotationVectorExpMap) {
    const Vec3 v(0.1, -0.4, 0.25);
    const Quaternion q = Quaternion::from_rotation_vector(v);
    const Mat3 oracle = Eigen::AngleAxisd(v.norm(), v.normalized()).toRotationMatrix();
    EXPECT_LT((quat_to_matrix(q) - oracle).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(Quaternion::from_rotation_vector(Vec3::Zero()) == Quaternion::identity());
    EXPECT_TRUE(Quaternion::from_rotation_vector(Vec3(1e-14, 0, 0)).is_unit(1e-15));
}

TEST(Quaternion, SharedCrossLanguageVectors) {
    std::ifstream in(data_dir() / "quaternion_vectors.json");
    ASSERT_TRUE(in.good());
    const auto doc = nlohmann::json::parse(in);
    const double tol = doc.at("tolerance").get<double>();
    ASSERT_GE(doc.at("cases").size(), 4u);
    for (const auto& c : doc.at("cases")) {
        SCOPED_TRACE(c.at("name").get<std::string>());
        const auto a = Quaternion::from_array(c.at("a").get<std::array<double, 4>>());
        const auto b = Quaternion::from_array(c.at("b").get<std::array<double, 4>>());
        const auto expected = Quaternion::from_array(c.at("product").get<std::array<double, 4>>());
        const Quaternion got = quat_mul(a, b);
        EXPECT_LT(quat_distance(got, expected), 1e-12 + 4 * tol);
        const Mat3 m = quat_to_matrix(got);
        for (int r = 0; r < 3; ++r) {
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(m(r, k), c.at("product_matrix")[r][k].get<double>(), 1e-12);
        }
        const Vec3 v(c.at("vector")[0].get<double>(), c.at("vector")[1].get<double>(), c.at("vector")[2].get<double>());
        const Vec3 rv = rotate(got, v);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(rv[k], c.at("rotated")[k].get<double>(), 1e-12);
    }
}
