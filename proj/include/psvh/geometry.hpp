#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

namespace psvh {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

// Pinhole camera. Square pixels, no distortion.
struct CameraIntrinsics {
    double f = 150.0;   // focal length [px]
    double u0 = 64.0;   // principal point [px]
    double v0 = 64.0;

    Mat3 matrix() const {
        Mat3 K;
        K << f, 0, u0, 0, f, v0, 0, 0, 1;
        return K;
    }
};

// 6-D object pose: three Euler angles [rad] plus an image-plane centering
// offset (tu, tv) [px] and the distance tz along the optical axis
// [cube-edge units]. The camera-frame translation is recovered as
// [tu*tz/f, tv*tz/f, tz].
struct Pose {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;
    double tu = 0.0;
    double tv = 0.0;
    double tz = 2.0;
};

struct RigidTransform {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();
};

struct PixelProjection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;  // camera-frame Z
};

// Depth at or below this counts as behind the camera.
inline constexpr double kMinCameraDepth = 1e-8;

// Euler convention used throughout: R = Rz(theta3) * Ry(theta2) * Rx(theta1).
Mat3 euler_to_rotation(double theta1, double theta2, double theta3);

// Derivatives of euler_to_rotation with respect to each angle.
std::array<Mat3, 3> euler_rotation_derivatives(double theta1, double theta2, double theta3);

// Throws std::invalid_argument if p.tz <= 0.
RigidTransform pose_to_transform(const Pose& p, const CameraIntrinsics& K);

// Perspective projection of an object-frame point. Empty when the point
// lands behind the camera (depth <= kMinCameraDepth).
std::optional<PixelProjection> project_point(const CameraIntrinsics& K, const RigidTransform& T,
                                             const Vec3& X);

// Analytic 2x6 Jacobian d(u,v)/d(theta1,theta2,theta3,tu,tv,tz).
// Empty for behind-camera points.
std::optional<Mat26> projection_pose_jacobian(const CameraIntrinsics& K, const Pose& p,
                                              const Vec3& X);

// Geodesic angle between two rotations, in degrees within [0, 180].
double rotation_error_deg(const Mat3& r1, const Mat3& r2);

// 100 * |t_est - t_gt| / |t_gt|. Throws std::invalid_argument when
// |t_gt| == 0.
double translation_error_pct(const Vec3& t_est, const Vec3& t_gt);

// Sampling ranges for random poses. theta1 acts as elevation, theta2 as
// azimuth, theta3 as in-plane roll. The default distance range is chosen
// so that all eight corners of the unit cube project inside a 128x128
// image at f = 150 for every rotation.
struct PoseRanges {
    double azimuth_min = 0.0;
    double azimuth_max = 6.283185307179586;
    double elevation_min = -0.5235987755982988;  // -30 deg
    double elevation_max = 0.5235987755982988;
    double roll_min = 0.0;
    double roll_max = 0.0;
    double dist_min = 2.35;
    double dist_max = 3.0;
    double center_jitter_px = 0.0;  // uniform [-j, j] on tu and tv
};

// Deterministic given the seed. Throws std::invalid_argument on an empty
// or non-positive distance range.
Pose random_pose(std::uint64_t seed, const PoseRanges& ranges = {});

}  // namespace psvh
