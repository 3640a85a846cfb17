#pragma once

#include <array>
#include <cstdint>

#include "psvh/geometry.hpp"
#include "psvh/silhouette.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

// The visual-hull layer lifts a silhouette probability map into the voxel
// grid: every voxel center is projected into the image and the silhouette
// is sampled there bilinearly, so H(X) = S(x). Voxels that project outside
// the image or behind the camera read 0.
namespace hull {

struct ForwardStats {
    std::size_t off_image = 0;
    std::size_t behind_camera = 0;
};

HullGrid forward(const SilhouetteMap& sil, const Pose& pose, const CameraIntrinsics& K, int dims,
                 ForwardStats* stats = nullptr);

struct Backward {
    SilhouetteMap silhouette_grad;  // dL/dS, same shape as the input silhouette
    Vec6 pose_grad = Vec6::Zero();  // dL/dp
};

// Exact adjoint of the forward pass: voxel gradients are scattered onto
// their four bilinear footprint pixels, and the pose gradient chains the
// bilinear image gradient with the analytic projection Jacobian.
Backward backward_exact(const HullGrid& hull_grad, const SilhouetteMap& sil, const Pose& pose,
                        const CameraIntrinsics& K);

// Spatial derivatives of a hull grid along X, Y, Z in cube units:
// central differences with spacing 1/dims, one-sided at the faces.
std::array<HullGrid, 3> spatial_gradient(const HullGrid& h);

// Alternative pose gradient assembled from the hull's own spatial
// gradients: dL/dp = sum_X dL/dH(X) * dH/dX * J(X), where J(X) is the
// per-voxel displacement, relative to the carved field, of the sample
// location as the pose changes (the back-rotated ray point
// R^T(Zc*K^-1*x - t) differentiated in p, with the sign chosen so the
// result estimates the true gradient). Coarser than backward_exact but
// needs only voxel-space convolutions plus per-voxel geometry.
Vec6 pose_grad_spatial(const HullGrid& hull_grad, const HullGrid& h, const Pose& pose,
                       const CameraIntrinsics& K);

}  // namespace hull

}  // namespace psvh
