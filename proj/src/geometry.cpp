#include "psvh/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "psvh/rng.hpp"

namespace psvh {

namespace {

Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

Mat3 drot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return m;
}

Mat3 drot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return m;
}

Mat3 drot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return m;
}

}  // namespace

Mat3 euler_to_rotation(double theta1, double theta2, double theta3) {
    return rot_z(theta3) * rot_y(theta2) * rot_x(theta1);
}

std::array<Mat3, 3> euler_rotation_derivatives(double theta1, double theta2, double theta3) {
    const Mat3 rx = rot_x(theta1), ry = rot_y(theta2), rz = rot_z(theta3);
    return {rz * ry * drot_x(theta1), rz * drot_y(theta2) * rx, drot_z(theta3) * ry * rx};
}

RigidTransform pose_to_transform(const Pose& p, const CameraIntrinsics& K) {
    if (!(p.tz > 0.0)) {
        throw std::invalid_argument("pose_to_transform: tz must be positive");
    }
    RigidTransform T;
    T.R = euler_to_rotation(p.theta1, p.theta2, p.theta3);
    T.t = Vec3(p.tu * p.tz / K.f, p.tv * p.tz / K.f, p.tz);
    return T;
}

std::optional<PixelProjection> project_point(const CameraIntrinsics& K, const RigidTransform& T,
                                             const Vec3& X) {
    const Vec3 xc = T.R * X + T.t;
    if (xc.z() <= kMinCameraDepth) {
        return std::nullopt;
    }
    PixelProjection out;
    out.u = K.f * xc.x() / xc.z() + K.u0;
    out.v = K.f * xc.y() / xc.z() + K.v0;
    out.depth = xc.z();
    return out;
}

std::optional<Mat26> projection_pose_jacobian(const CameraIntrinsics& K, const Pose& p,
                                              const Vec3& X) {
    const RigidTransform T = pose_to_transform(p, K);
    const Vec3 xc = T.R * X + T.t;
    const double zc = xc.z();
    if (zc <= kMinCameraDepth) {
        return std::nullopt;
    }

    // d(u,v)/d(camera point)
    Eigen::Matrix<double, 2, 3> dpix;
    dpix << K.f / zc, 0, -K.f * xc.x() / (zc * zc),
            0, K.f / zc, -K.f * xc.y() / (zc * zc);

    // d(camera point)/d(pose)
    Eigen::Matrix<double, 3, 6> dxc;
    const auto dR = euler_rotation_derivatives(p.theta1, p.theta2, p.theta3);
    dxc.col(0) = dR[0] * X;
    dxc.col(1) = dR[1] * X;
    dxc.col(2) = dR[2] * X;
    dxc.col(3) = Vec3(p.tz / K.f, 0, 0);
    dxc.col(4) = Vec3(0, p.tz / K.f, 0);
    dxc.col(5) = Vec3(p.tu / K.f, p.tv / K.f, 1);

    return Mat26(dpix * dxc);
}

double rotation_error_deg(const Mat3& r1, const Mat3& r2) {
    const double tr = (r1.transpose() * r2).trace();
    const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(arg) * 180.0 / M_PI;
}

double translation_error_pct(const Vec3& t_est, const Vec3& t_gt) {
    const double base = t_gt.norm();
    if (base <= 0.0) {
        throw std::invalid_argument("translation_error_pct: ground-truth translation is zero");
    }
    return 100.0 * (t_est - t_gt).norm() / base;
}

Pose random_pose(std::uint64_t seed, const PoseRanges& r) {
    if (r.azimuth_max < r.azimuth_min || r.elevation_max < r.elevation_min ||
        r.roll_max < r.roll_min || r.dist_max < r.dist_min) {
        throw std::invalid_argument("random_pose: empty range");
    }
    if (!(r.dist_min > 0.0)) {
        throw std::invalid_argument("random_pose: distance range must be positive");
    }
    Rng rng(seed);
    Pose p;
    p.theta1 = rng.uniform(r.elevation_min, r.elevation_max);
    p.theta2 = rng.uniform(r.azimuth_min, r.azimuth_max);
    p.theta3 = rng.uniform(r.roll_min, r.roll_max);
    p.tu = rng.uniform(-r.center_jitter_px, r.center_jitter_px);
    p.tv = rng.uniform(-r.center_jitter_px, r.center_jitter_px);
    p.tz = rng.uniform(r.dist_min, r.dist_max);
    return p;
}

}  // namespace psvh
