#include "psvh/psvh_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace psvh {
namespace hull {

namespace {

// Bilinear footprint of a continuous image location (u, v); pixel (x, y)
// holds the value at image point (x + 0.5, y + 0.5).
struct Footprint {
    int x0, y0;
    double fx, fy;
};

Footprint footprint_at(double u, double v) {
    const double x = u - 0.5, y = v - 0.5;
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    return {static_cast<int>(fx0), static_cast<int>(fy0), x - fx0, y - fy0};
}

double pixel_or_zero(const SilhouetteMap& s, int x, int y) {
    if (x < 0 || y < 0 || x >= s.width || y >= s.height) {
        return 0.0;
    }
    return s.at(x, y);
}

bool in_image(const SilhouetteMap& s, double u, double v) {
    return u >= 0.0 && v >= 0.0 && u < s.width && v < s.height;
}

}  // namespace

HullGrid forward(const SilhouetteMap& sil, const Pose& pose, const CameraIntrinsics& K, int dims,
                 ForwardStats* stats) {
    const RigidTransform T = pose_to_transform(pose, K);
    HullGrid h(dims);
    ForwardStats local;
    for (int k = 0; k < dims; ++k) {
        for (int j = 0; j < dims; ++j) {
            for (int i = 0; i < dims; ++i) {
                const auto proj = project_point(K, T, voxel_center(i, j, k, dims));
                if (!proj) {
                    ++local.behind_camera;
                    continue;
                }
                if (!in_image(sil, proj->u, proj->v)) {
                    ++local.off_image;
                    continue;
                }
                const Footprint fp = footprint_at(proj->u, proj->v);
                const double s00 = pixel_or_zero(sil, fp.x0, fp.y0);
                const double s10 = pixel_or_zero(sil, fp.x0 + 1, fp.y0);
                const double s01 = pixel_or_zero(sil, fp.x0, fp.y0 + 1);
                const double s11 = pixel_or_zero(sil, fp.x0 + 1, fp.y0 + 1);
                h.at(i, j, k) = (1 - fp.fx) * (1 - fp.fy) * s00 + fp.fx * (1 - fp.fy) * s10 +
                                (1 - fp.fx) * fp.fy * s01 + fp.fx * fp.fy * s11;
            }
        }
    }
    if (stats) {
        *stats = local;
    }
    return h;
}

Backward backward_exact(const HullGrid& hull_grad, const SilhouetteMap& sil, const Pose& pose,
                        const CameraIntrinsics& K) {
    const int dims = hull_grad.dims;
    const RigidTransform T = pose_to_transform(pose, K);
    Backward out;
    out.silhouette_grad = SilhouetteMap(sil.width, sil.height);

    auto scatter = [&](int x, int y, double g) {
        if (x >= 0 && y >= 0 && x < sil.width && y < sil.height) {
            out.silhouette_grad.at(x, y) += g;
        }
    };

    for (int k = 0; k < dims; ++k) {
        for (int j = 0; j < dims; ++j) {
            for (int i = 0; i < dims; ++i) {
                const double g = hull_grad.at(i, j, k);
                if (g == 0.0) {
                    continue;
                }
                const Vec3 X = voxel_center(i, j, k, dims);
                const auto proj = project_point(K, T, X);
                if (!proj || !in_image(sil, proj->u, proj->v)) {
                    continue;
                }
                const Footprint fp = footprint_at(proj->u, proj->v);
                scatter(fp.x0, fp.y0, g * (1 - fp.fx) * (1 - fp.fy));
                scatter(fp.x0 + 1, fp.y0, g * fp.fx * (1 - fp.fy));
                scatter(fp.x0, fp.y0 + 1, g * (1 - fp.fx) * fp.fy);
                scatter(fp.x0 + 1, fp.y0 + 1, g * fp.fx * fp.fy);

                // image gradient of the bilinear interpolant at (u, v)
                const double s00 = pixel_or_zero(sil, fp.x0, fp.y0);
                const double s10 = pixel_or_zero(sil, fp.x0 + 1, fp.y0);
                const double s01 = pixel_or_zero(sil, fp.x0, fp.y0 + 1);
                const double s11 = pixel_or_zero(sil, fp.x0 + 1, fp.y0 + 1);
                const double ds_du = (s10 - s00) * (1 - fp.fy) + (s11 - s01) * fp.fy;
                const double ds_dv = (s01 - s00) * (1 - fp.fx) + (s11 - s10) * fp.fx;

                const auto J = projection_pose_jacobian(K, pose, X);
                if (!J) {
                    continue;
                }
                out.pose_grad += g * (J->row(0) * ds_du + J->row(1) * ds_dv).transpose();
            }
        }
    }
    return out;
}

std::array<HullGrid, 3> spatial_gradient(const HullGrid& h) {
    const int d = h.dims;
    if (d < 3) {
        throw std::invalid_argument("spatial_gradient: dims must be >= 3");
    }
    const double pitch = 1.0 / d;
    std::array<HullGrid, 3> g = {HullGrid(d), HullGrid(d), HullGrid(d)};
    auto diff = [&](double prev, double next, int span) { return (next - prev) / (span * pitch); };
    for (int k = 0; k < d; ++k) {
        for (int j = 0; j < d; ++j) {
            for (int i = 0; i < d; ++i) {
                {
                    const int lo = std::max(i - 1, 0), hi = std::min(i + 1, d - 1);
                    g[0].at(i, j, k) = diff(h.at(lo, j, k), h.at(hi, j, k), hi - lo);
                }
                {
                    const int lo = std::max(j - 1, 0), hi = std::min(j + 1, d - 1);
                    g[1].at(i, j, k) = diff(h.at(i, lo, k), h.at(i, hi, k), hi - lo);
                }
                {
                    const int lo = std::max(k - 1, 0), hi = std::min(k + 1, d - 1);
                    g[2].at(i, j, k) = diff(h.at(i, j, lo), h.at(i, j, hi), hi - lo);
                }
            }
        }
    }
    return g;
}

Vec6 pose_grad_spatial(const HullGrid& hull_grad, const HullGrid& h, const Pose& pose,
                       const CameraIntrinsics& K) {
    if (hull_grad.dims != h.dims) {
        throw std::invalid_argument("pose_grad_spatial: shape mismatch");
    }
    const int dims = h.dims;
    const RigidTransform T = pose_to_transform(pose, K);
    const Mat3 Rt = T.R.transpose();
    const auto dR = euler_rotation_derivatives(pose.theta1, pose.theta2, pose.theta3);
    const auto grads = spatial_gradient(h);

    Vec6 acc = Vec6::Zero();
    for (int k = 0; k < dims; ++k) {
        for (int j = 0; j < dims; ++j) {
            for (int i = 0; i < dims; ++i) {
                const double g = hull_grad.at(i, j, k);
                if (g == 0.0) {
                    continue;
                }
                const Vec3 X = voxel_center(i, j, k, dims);
                const Vec3 xc = T.R * X + T.t;
                if (xc.z() <= kMinCameraDepth) {
                    continue;
                }
                const Vec3 field_grad(grads[0].at(i, j, k), grads[1].at(i, j, k),
                                      grads[2].at(i, j, k));

                // Displacement of the voxel relative to the hull field per
                // unit pose change, for the ray pinned at the voxel's
                // current projection.
                Eigen::Matrix<double, 3, 6> J;
                J.col(0) = -(dR[0].transpose() * (T.R * X));
                J.col(1) = -(dR[1].transpose() * (T.R * X));
                J.col(2) = -(dR[2].transpose() * (T.R * X));
                J.col(3) = Rt * Vec3(pose.tz / K.f, 0, 0);
                J.col(4) = Rt * Vec3(0, pose.tz / K.f, 0);
                J.col(5) = Rt * Vec3(pose.tu / K.f, pose.tv / K.f, 1);

                acc += g * (field_grad.transpose() * J).transpose();
            }
        }
    }
    return acc;
}

}  // namespace hull
}  // namespace psvh
