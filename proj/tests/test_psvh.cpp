#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "psvh/datagen.hpp"
#include "psvh/gradcheck.hpp"
#include "psvh/psvh_layer.hpp"
#include "psvh/rng.hpp"
#include "psvh/silhouette.hpp"
#include "support.hpp"

using namespace psvh;
using psvh::testing::shift_pose;

namespace {

// Scalar reimplementation of project-and-sample for the brute-force
// oracle; no shared code with the layer.
double oracle_sample(const SilhouetteMap& s, const Pose& p, const CameraIntrinsics& K,
                     const Vec3& X) {
    const Mat3 R = euler_to_rotation(p.theta1, p.theta2, p.theta3);
    const Vec3 t(p.tu * p.tz / K.f, p.tv * p.tz / K.f, p.tz);
    const Vec3 xc = R * X + t;
    if (xc.z() <= 1e-8) {
        return 0.0;
    }
    const double u = K.f * xc.x() / xc.z() + K.u0;
    const double v = K.f * xc.y() / xc.z() + K.v0;
    if (u < 0 || v < 0 || u >= s.width || v >= s.height) {
        return 0.0;
    }
    const double x = u - 0.5, y = v - 0.5;
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto px = [&](int xi, int yi) {
        return (xi < 0 || yi < 0 || xi >= s.width || yi >= s.height) ? 0.0 : s.at(xi, yi);
    };
    return (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
           (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
}

SilhouetteMap blurred_box_case(std::uint64_t seed, Pose& pose, const CameraIntrinsics& K,
                               int blur) {
    Rng rng(seed);
    ShapeParams sp;
    sp.extents = Vec3(rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7));
    const VoxelGrid shape = make_shape(ShapeKind::box, sp, 16);
    PoseRanges pr;
    pr.dist_min = 1.9;
    pr.dist_max = 2.5;
    pr.roll_min = -0.3;
    pr.roll_max = 0.3;
    pr.center_jitter_px = 3.0;
    pose = random_pose(rng.next_u64(), pr);
    return box_blur(render_silhouette(shape, pose, K, 128, 128), blur);
}

}  // namespace

TEST_SUITE("psvh") {

TEST_CASE("forward: constant silhouettes lift to constant hulls") {
    const CameraIntrinsics K;
    Pose pose;
    pose.tz = 2.35;

    const HullGrid ones = hull::forward(SilhouetteMap(128, 128, 1.0), pose, K, 16);
    for (double v : ones.values) {
        REQUIRE(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    const HullGrid zeros = hull::forward(SilhouetteMap(128, 128, 0.0), pose, K, 16);
    CHECK(*std::max_element(zeros.values.begin(), zeros.values.end()) == 0.0);

    // partition of unity at a fractional constant, arbitrary rotation
    pose.theta1 = 0.4;
    pose.theta2 = 1.3;
    const HullGrid half = hull::forward(SilhouetteMap(128, 128, 0.37), pose, K, 16);
    for (double v : half.values) {
        REQUIRE(v == doctest::Approx(0.37).epsilon(1e-12));
    }
}

TEST_CASE("forward: half-plane mask selects voxels left of the principal point") {
    const CameraIntrinsics K;
    SilhouetteMap s(128, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 64; ++x) s.at(x, y) = 1.0;
    Pose pose;
    pose.tz = 2.0;

    const HullGrid h = hull::forward(s, pose, K, 4);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) {
                const Vec3 c = voxel_center(i, j, k, 4);
                const bool left = (K.f * c.x() / (c.z() + pose.tz) + K.u0) < K.u0;
                CHECK(binarize(h, 0.5).at(i, j, k) == (left ? 1.0 : 0.0));
            }
}

TEST_CASE("forward matches the per-voxel scalar oracle") {
    const CameraIntrinsics K;
    Pose pose;
    SilhouetteMap sil = blurred_box_case(41, pose, K, 2);
    const HullGrid h = hull::forward(sil, pose, K, 12);
    for (int k = 0; k < 12; ++k)
        for (int j = 0; j < 12; ++j)
            for (int i = 0; i < 12; ++i) {
                REQUIRE(h.at(i, j, k) ==
                        doctest::Approx(oracle_sample(sil, pose, K, voxel_center(i, j, k, 12)))
                            .epsilon(1e-12));
            }
}

TEST_CASE("forward zeroes voxels that leave the image") {
    const CameraIntrinsics K;
    const SilhouetteMap ones(128, 128, 1.0);
    Pose pose;
    pose.tz = 2.35;
    double prev = std::numeric_limits<double>::infinity();
    // slide the object out of frame; in-hull mass must fall to zero
    for (double tu = 0.0; tu <= 300.0; tu += 30.0) {
        pose.tu = tu;
        hull::ForwardStats stats;
        const HullGrid h = hull::forward(ones, pose, K, 12, &stats);
        const double mass = std::accumulate(h.values.begin(), h.values.end(), 0.0);
        CHECK(mass <= prev + 1e-9);
        prev = mass;
        if (tu >= 300.0) {
            CHECK(mass == 0.0);
            CHECK(stats.off_image == h.size());
        }
    }
}

TEST_CASE("backward: zero upstream gradient gives zero outputs") {
    const CameraIntrinsics K;
    Pose pose;
    const SilhouetteMap sil = blurred_box_case(43, pose, K, 2);
    const auto back = hull::backward_exact(HullGrid(8), sil, pose, K);
    CHECK(back.pose_grad.norm() == 0.0);
    CHECK(*std::max_element(back.silhouette_grad.values.begin(),
                            back.silhouette_grad.values.end()) == 0.0);
}

TEST_CASE("backward: one voxel scatters to at most 4 pixels that sum to its gradient") {
    const CameraIntrinsics K;
    Pose pose;
    const SilhouetteMap sil = blurred_box_case(47, pose, K, 2);
    HullGrid dh(8);
    dh.at(3, 4, 2) = 0.7;
    const auto back = hull::backward_exact(dh, sil, pose, K);
    std::size_t nonzero = 0;
    double total = 0.0;
    for (double v : back.silhouette_grad.values) {
        nonzero += v != 0.0;
        total += v;
    }
    CHECK(nonzero <= 4);
    CHECK(nonzero >= 1);
    CHECK(total == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("backward: scatter is the exact adjoint of the linear forward map") {
    const CameraIntrinsics K;
    Pose pose;
    SilhouetteMap sil = blurred_box_case(53, pose, K, 2);
    Rng rng(99);
    SilhouetteMap ds(128, 128);
    for (double& v : ds.values) v = rng.uniform(-1.0, 1.0);
    HullGrid w(10);
    for (double& v : w.values) v = rng.uniform(-1.0, 1.0);

    const HullGrid h_ds = hull::forward(ds, pose, K, 10);  // forward is linear in S
    const double lhs = std::inner_product(h_ds.values.begin(), h_ds.values.end(),
                                          w.values.begin(), 0.0);
    const auto back = hull::backward_exact(w, sil, pose, K);
    const double rhs = std::inner_product(ds.values.begin(), ds.values.end(),
                                          back.silhouette_grad.values.begin(), 0.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("backward pose gradient matches finite differences over 50 seeds") {
    const CameraIntrinsics K;
    double worst = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        Pose pose;
        const SilhouetteMap sil = blurred_box_case(1000 + seed, pose, K, 2);
        Rng rng(seed);
        HullGrid w(8);
        for (double& v : w.values) v = rng.uniform(-1.0, 1.0);

        const Vec6 analytic = hull::backward_exact(w, sil, pose, K).pose_grad;
        std::vector<double> a(6), n(6);
        for (int param = 0; param < 6; ++param) {
            a[param] = analytic[param];
            const double h = 1e-7;
            const auto loss = [&](const Pose& p) {
                const HullGrid hg = hull::forward(sil, p, K, 8);
                return std::inner_product(hg.values.begin(), hg.values.end(), w.values.begin(),
                                          0.0);
            };
            n[param] =
                (loss(shift_pose(pose, param, h)) - loss(shift_pose(pose, param, -h))) / (2 * h);
        }
        worst = std::max(worst, psvh::testing::rel_error(a, n));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("spatial_gradient: constants, linear ramps, trilinear polynomial oracle") {
    HullGrid c(8, 0.3);
    for (const auto& g : hull::spatial_gradient(c)) {
        CHECK(*std::max_element(g.values.begin(), g.values.end()) == 0.0);
    }

    // H linear in x with slope s per cube unit
    const double slope = 1.7;
    HullGrid lin(8);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) lin.at(i, j, k) = slope * voxel_center(i, j, k, 8).x();
    const auto g = hull::spatial_gradient(lin);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                REQUIRE(g[0].at(i, j, k) == doctest::Approx(slope).epsilon(1e-12));
                REQUIRE(g[1].at(i, j, k) == doctest::Approx(0.0));
            }

    // random trilinear polynomial: central differences are exact on it
    Rng rng(7);
    double coef[8];
    for (double& x : coef) x = rng.uniform(-1.0, 1.0);
    auto poly = [&](const Vec3& p) {
        return coef[0] + coef[1] * p.x() + coef[2] * p.y() + coef[3] * p.z() +
               coef[4] * p.x() * p.y() + coef[5] * p.x() * p.z() + coef[6] * p.y() * p.z() +
               coef[7] * p.x() * p.y() * p.z();
    };
    auto dpoly_dx = [&](const Vec3& p) {
        return coef[1] + coef[4] * p.y() + coef[5] * p.z() + coef[7] * p.y() * p.z();
    };
    HullGrid field(10);
    for (int k = 0; k < 10; ++k)
        for (int j = 0; j < 10; ++j)
            for (int i = 0; i < 10; ++i) field.at(i, j, k) = poly(voxel_center(i, j, k, 10));
    const auto pg = hull::spatial_gradient(field);
    for (int k = 1; k < 9; ++k)
        for (int j = 1; j < 9; ++j)
            for (int i = 1; i < 9; ++i) {
                REQUIRE(pg[0].at(i, j, k) ==
                        doctest::Approx(dpoly_dx(voxel_center(i, j, k, 10))).epsilon(1e-6));
            }
}

TEST_CASE("spatial-gradient pose path points the same way as the exact path") {
    const CameraIntrinsics K;
    for (int seed = 0; seed < 10; ++seed) {
        Pose pose;
        const SilhouetteMap sil = blurred_box_case(100 + seed, pose, K, 3);
        const int dims = 24;
        // weights shaped like the pose-fitting objective
        Rng rng(seed);
        ShapeParams sp;
        sp.extents = Vec3(0.5, 0.45, 0.55);
        const VoxelGrid v = make_shape(ShapeKind::box, sp, dims);
        HullGrid w(dims);
        for (std::size_t n = 0; n < w.size(); ++n) {
            w.values[n] = 0.1 * (1.0 - v.values[n]) - v.values[n];
        }
        const HullGrid h = hull::forward(sil, pose, K, dims);
        const Vec6 exact = hull::backward_exact(w, sil, pose, K).pose_grad;
        const Vec6 spatial = hull::pose_grad_spatial(w, h, pose, K);
        const double cosine = exact.dot(spatial) / (exact.norm() * spatial.norm());
        CHECK(cosine > 0.95);
    }

    CHECK(hull::pose_grad_spatial(HullGrid(8), HullGrid(8, 0.5), Pose{}, K).norm() == 0.0);
}

TEST_CASE("spatial-gradient pose path agrees in sign with finite differences") {
    const CameraIntrinsics K;
    Pose pose;
    const SilhouetteMap sil = blurred_box_case(77, pose, K, 3);
    const int dims = 32;
    ShapeParams sp;
    sp.extents = Vec3(0.52, 0.4, 0.61);
    const VoxelGrid v = make_shape(ShapeKind::box, sp, dims);
    HullGrid w(dims);
    for (std::size_t n = 0; n < w.size(); ++n) {
        w.values[n] = 0.1 * (1.0 - v.values[n]) - v.values[n];
    }
    const HullGrid h = hull::forward(sil, pose, K, dims);
    const Vec6 spatial = hull::pose_grad_spatial(w, h, pose, K);

    const auto loss = [&](const Pose& p) {
        const HullGrid hg = hull::forward(sil, p, K, dims);
        return std::inner_product(hg.values.begin(), hg.values.end(), w.values.begin(), 0.0);
    };
    double scale = 0.0;
    Vec6 fd;
    for (int param = 0; param < 6; ++param) {
        fd[param] = (loss(shift_pose(pose, param, 1e-6)) - loss(shift_pose(pose, param, -1e-6))) /
                    2e-6;
        scale = std::max(scale, std::abs(fd[param]));
    }
    for (int param = 0; param < 6; ++param) {
        if (std::abs(fd[param]) > 0.05 * scale) {
            CHECK(spatial[param] * fd[param] > 0.0);
        }
    }
}

TEST_CASE("gradcheck: bilinear pose path under 1e-4, silhouette path under 1e-6") {
    GradCheckCase c;
    c.dims = 8;
    c.seed = 3;
    const GradCheckReport report = run_gradcheck(c);
    CHECK(report.pose_eligible);
    CHECK(report.max_rel_pose < 1e-4);
    CHECK(report.max_rel_silhouette < 1e-6);
    CHECK(report.ok());

    std::ostringstream csv;
    write_gradcheck_csv(csv, report);
    CHECK(csv.str().rfind("parameter,analytic,numeric,rel_error\n", 0) == 0);
    CHECK(csv.str().find("theta1,") != std::string::npos);
}

TEST_CASE("gradcheck flags binary silhouettes as ineligible for the pose path") {
    GradCheckCase c;
    c.dims = 8;
    c.seed = 5;
    c.binarize_silhouette = true;
    const GradCheckReport report = run_gradcheck(c);
    CHECK_FALSE(report.pose_eligible);
    CHECK(report.max_rel_silhouette < 1e-6);  // the linear path still checks out
    for (const auto& row : report.rows) {
        CHECK(row.parameter.rfind("theta", 0) != 0);
    }
}

}  // TEST_SUITE
