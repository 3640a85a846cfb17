#include <doctest.h>

#include <cmath>

#include "psvh/geometry.hpp"
#include "psvh/rng.hpp"
#include "support.hpp"

using namespace psvh;
using psvh::testing::central_diff;
using psvh::testing::shift_pose;

namespace {

Mat3 axis_rotation(int axis, double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m = Mat3::Identity();
    switch (axis) {
        case 0: m << 1, 0, 0, 0, c, -s, 0, s, c; break;
        case 1: m << c, 0, s, 0, 1, 0, -s, 0, c; break;
        case 2: m << c, -s, 0, s, c, 0, 0, 0, 1; break;
    }
    return m;
}

Pose sample_pose(Rng& rng) {
    Pose p;
    p.theta1 = rng.uniform(-1.2, 1.2);
    p.theta2 = rng.uniform(-3.0, 3.0);
    p.theta3 = rng.uniform(-1.2, 1.2);
    p.tu = rng.uniform(-20.0, 20.0);
    p.tv = rng.uniform(-20.0, 20.0);
    p.tz = rng.uniform(1.5, 3.0);
    return p;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("euler_to_rotation: zero angles give the identity") {
    CHECK((euler_to_rotation(0, 0, 0) - Mat3::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("euler_to_rotation: quarter turn about x maps +y to +z") {
    const Vec3 mapped = euler_to_rotation(M_PI / 2, 0, 0) * Vec3(0, 1, 0);
    CHECK((mapped - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("euler_to_rotation matches the per-axis composition oracle") {
    const Mat3 expected = axis_rotation(2, 1.1) * axis_rotation(1, -0.2) * axis_rotation(0, 0.3);
    CHECK((euler_to_rotation(0.3, -0.2, 1.1) - expected).norm() < 1e-12);
}

TEST_CASE("euler_to_rotation stays orthonormal with unit determinant") {
    Rng rng(11);
    for (int n = 0; n < 100; ++n) {
        const Mat3 r = euler_to_rotation(rng.uniform(-6, 6), rng.uniform(-6, 6),
                                         rng.uniform(-6, 6));
        CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-9);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("pose_to_transform recovers the camera translation") {
    CameraIntrinsics K;
    K.f = 100;
    Pose p;
    p.tz = 2;
    CHECK((pose_to_transform(p, K).t - Vec3(0, 0, 2)).norm() < 1e-15);

    p.tu = 50;
    CHECK((pose_to_transform(p, K).t - Vec3(1, 0, 2)).norm() < 1e-15);
}

TEST_CASE("pose_to_transform rejects non-positive distance") {
    Pose p;
    p.tz = 0.0;
    CHECK_THROWS_AS(pose_to_transform(p, CameraIntrinsics{}), std::invalid_argument);
    p.tz = -1.0;
    CHECK_THROWS_AS(pose_to_transform(p, CameraIntrinsics{}), std::invalid_argument);
}

TEST_CASE("project_point: principal point, offset, and behind-camera cases") {
    CameraIntrinsics K;
    K.f = 100;
    K.u0 = 64;
    K.v0 = 64;
    RigidTransform T;
    T.t = Vec3(0, 0, 2);

    auto at_origin = project_point(K, T, Vec3(0, 0, 0));
    REQUIRE(at_origin.has_value());
    CHECK(at_origin->u == doctest::Approx(64));
    CHECK(at_origin->v == doctest::Approx(64));
    CHECK(at_origin->depth == doctest::Approx(2));

    auto offset = project_point(K, T, Vec3(0.25, 0, 0));
    REQUIRE(offset.has_value());
    CHECK(offset->u == doctest::Approx(76.5));
    CHECK(offset->v == doctest::Approx(64));

    CHECK_FALSE(project_point(K, T, Vec3(0, 0, -2.1)).has_value());
}

TEST_CASE("project_point is scale-consistent along the ray") {
    CameraIntrinsics K;
    RigidTransform T;  // identity, zero translation: X is the camera point
    const Vec3 xc(0.2, -0.1, 1.7);
    const auto a = project_point(K, T, xc);
    const auto b = project_point(K, T, 3.7 * xc);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->u == doctest::Approx(b->u).epsilon(1e-12));
    CHECK(a->v == doctest::Approx(b->v).epsilon(1e-12));
}

TEST_CASE("object origin always projects to the principal point plus offset") {
    CameraIntrinsics K;
    Rng rng(17);
    for (int n = 0; n < 50; ++n) {
        const Pose p = sample_pose(rng);
        const auto proj = project_point(K, pose_to_transform(p, K), Vec3(0, 0, 0));
        REQUIRE(proj.has_value());
        CHECK(proj->u == doctest::Approx(K.u0 + p.tu).epsilon(1e-12));
        CHECK(proj->v == doctest::Approx(K.v0 + p.tv).epsilon(1e-12));
    }
}

TEST_CASE("projection_pose_jacobian: unit image-offset derivatives at the origin") {
    CameraIntrinsics K;
    Pose p;
    p.tz = 2;
    const auto J = projection_pose_jacobian(K, p, Vec3(0, 0, 0));
    REQUIRE(J.has_value());
    CHECK((*J)(0, 3) == doctest::Approx(1.0));
    CHECK((*J)(1, 4) == doctest::Approx(1.0));
    CHECK((*J)(0, 5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("projection_pose_jacobian matches finite differences") {
    CameraIntrinsics K;
    Rng rng(23);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Pose p = sample_pose(rng);
        const Vec3 X(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
        const auto J = projection_pose_jacobian(K, p, X);
        REQUIRE(J.has_value());
        std::vector<double> analytic, numeric;
        for (int param = 0; param < 6; ++param) {
            for (int row = 0; row < 2; ++row) {
                analytic.push_back((*J)(row, param));
                numeric.push_back(central_diff(
                    [&](double x) {
                        Pose q = shift_pose(p, param, x - 0.0);
                        const auto proj = project_point(K, pose_to_transform(q, K), X);
                        REQUIRE(proj.has_value());
                        return row == 0 ? proj->u : proj->v;
                    },
                    0.0, 1e-5));
            }
        }
        worst = std::max(worst, psvh::testing::rel_error(analytic, numeric));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("projection_pose_jacobian distance derivative at an offset point") {
    CameraIntrinsics K;
    K.f = 100;
    Pose p;
    p.tz = 2;
    const Vec3 X(0.25, 0, 0);
    const auto J = projection_pose_jacobian(K, p, X);
    REQUIRE(J.has_value());
    const double numeric = central_diff(
        [&](double tz) {
            Pose q = p;
            q.tz = tz;
            return project_point(K, pose_to_transform(q, K), X)->u;
        },
        p.tz, 1e-6);
    CHECK((*J)(0, 5) == doctest::Approx(numeric).epsilon(1e-7));
}

TEST_CASE("rotation_error: identity, quarter turn, axis-angle oracle") {
    const Mat3 I = Mat3::Identity();
    CHECK(rotation_error_deg(I, I) == doctest::Approx(0.0));
    CHECK(rotation_error_deg(I, euler_to_rotation(0, 0, M_PI / 2)) == doctest::Approx(90.0));

    Rng rng(31);
    for (int n = 0; n < 50; ++n) {
        const Mat3 r1 = euler_to_rotation(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                          rng.uniform(-3, 3));
        const Mat3 r2 = euler_to_rotation(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                          rng.uniform(-3, 3));
        const double oracle =
            Eigen::AngleAxisd(Mat3(r1.transpose() * r2)).angle() * 180.0 / M_PI;
        CHECK(rotation_error_deg(r1, r2) == doctest::Approx(oracle).epsilon(1e-7));
    }
}

TEST_CASE("rotation_error is symmetric and satisfies the triangle inequality") {
    Rng rng(37);
    for (int n = 0; n < 30; ++n) {
        const Mat3 a = euler_to_rotation(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const Mat3 b = euler_to_rotation(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const Mat3 c = euler_to_rotation(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        CHECK(rotation_error_deg(a, b) == doctest::Approx(rotation_error_deg(b, a)));
        CHECK(rotation_error_deg(a, c) <= rotation_error_deg(a, b) + rotation_error_deg(b, c) + 1e-9);
    }
}

TEST_CASE("translation_error: exact cases and constructed perturbation") {
    CHECK(translation_error_pct(Vec3(1, 2, 3), Vec3(1, 2, 3)) == doctest::Approx(0.0));
    CHECK(translation_error_pct(Vec3(0, 0, 2.1), Vec3(0, 0, 2)) == doctest::Approx(5.0));
    CHECK_THROWS_AS(translation_error_pct(Vec3(1, 0, 0), Vec3(0, 0, 0)), std::invalid_argument);

    Rng rng(41);
    for (int n = 0; n < 20; ++n) {
        const Vec3 t(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(1, 3));
        Vec3 dir(rng.normal(), rng.normal(), rng.normal());
        dir.normalize();
        CHECK(translation_error_pct(t + 0.03 * t.norm() * dir, t) ==
              doctest::Approx(3.0).epsilon(1e-9));
    }
}

TEST_CASE("random_pose is deterministic and respects ranges") {
    const Pose a = random_pose(1234);
    const Pose b = random_pose(1234);
    CHECK(a.theta1 == b.theta1);
    CHECK(a.theta2 == b.theta2);
    CHECK(a.theta3 == b.theta3);
    CHECK(a.tu == b.tu);
    CHECK(a.tv == b.tv);
    CHECK(a.tz == b.tz);

    const PoseRanges ranges;
    for (int n = 0; n < 1000; ++n) {
        const Pose p = random_pose(n);
        CHECK(p.tz >= ranges.dist_min);
        CHECK(p.tz <= ranges.dist_max);
    }

    PoseRanges empty;
    empty.dist_min = 2.0;
    empty.dist_max = 1.0;
    CHECK_THROWS_AS(random_pose(0, empty), std::invalid_argument);
}

TEST_CASE("random_pose defaults keep the whole cube inside a 128x128 frame") {
    CameraIntrinsics K;  // f = 150, principal point (64, 64)
    for (int n = 0; n < 1000; ++n) {
        const Pose p = random_pose(9000 + n);
        const RigidTransform T = pose_to_transform(p, K);
        for (int corner = 0; corner < 8; ++corner) {
            const Vec3 X(corner & 1 ? 0.5 : -0.5, corner & 2 ? 0.5 : -0.5,
                         corner & 4 ? 0.5 : -0.5);
            const auto proj = project_point(K, T, X);
            REQUIRE(proj.has_value());
            CHECK(proj->u >= 0.0);
            CHECK(proj->u < 128.0);
            CHECK(proj->v >= 0.0);
            CHECK(proj->v < 128.0);
        }
    }
}

}  // TEST_SUITE
