#pragma once

#include <cstdint>
#include <vector>

#include "psvh/geometry.hpp"

namespace psvh {
namespace nn {

// Multi-channel voxel feature field, channel-major then z/y/x (x fastest).
struct Field4 {
    int channels = 0;
    int dims = 0;
    std::vector<double> values;

    Field4() = default;
    Field4(int c, int d)
        : channels(c), dims(d), values(static_cast<std::size_t>(c) * d * d * d, 0.0) {}

    std::size_t spatial_size() const { return static_cast<std::size_t>(dims) * dims * dims; }
    double* channel(int c) { return values.data() + c * spatial_size(); }
    const double* channel(int c) const { return values.data() + c * spatial_size(); }
    std::size_t index(int c, int z, int y, int x) const {
        return ((static_cast<std::size_t>(c) * dims + z) * dims + y) * dims + x;
    }
};

// 3D convolution weights; cross-correlation, zero padding, stride 1,
// spatial size preserved. Kernel size must be odd (1, 3 or 5).
struct Conv3Params {
    int in_channels = 0;
    int out_channels = 0;
    int ksize = 3;
    std::vector<double> weights;  // [co][ci][kz][ky][kx]
    std::vector<double> bias;     // [co]

    Conv3Params() = default;
    Conv3Params(int cin, int cout, int k);

    std::size_t weight_index(int co, int ci, int kz, int ky, int kx) const {
        return (((static_cast<std::size_t>(co) * in_channels + ci) * ksize + kz) * ksize + ky) *
                   ksize +
               kx;
    }
};

Field4 conv3d_forward(const Field4& input, const Conv3Params& params);

struct Conv3Backward {
    Field4 input_grad;
    Conv3Params param_grad;  // same shapes as the forward params
};

Conv3Backward conv3d_backward(const Field4& input, const Conv3Params& params,
                              const Field4& output_grad);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Field4 sigmoid_forward(const Field4& x);
// Takes the forward *output*, since sigma' = y (1 - y).
Field4 sigmoid_backward(const Field4& output, const Field4& output_grad);

Field4 relu_forward(const Field4& x);
// Takes the forward *input*; the subgradient at 0 is 0.
Field4 relu_backward(const Field4& input, const Field4& output_grad);

struct ScalarLoss {
    double value = 0.0;
    std::vector<double> grad;
};

// Mean binary cross-entropy. Predictions are clamped to
// [1e-7, 1 - 1e-7] before the logs; the gradient is evaluated at the
// clamped values. Throws std::invalid_argument on size mismatch.
ScalarLoss bce_loss(const std::vector<double>& pred, const std::vector<double>& target);

struct PoseLossResult {
    double value = 0.0;
    Vec6 grad = Vec6::Zero();  // d/d(est)
};

// Weighted L1 pose regression loss. Angles are wrapped to [0, 2pi),
// normalized to [0, 1], and differenced modulo 1 so that 0.01 rad and
// 2pi - 0.01 rad count as nearly equal. Subgradients are 0 at ties.
PoseLossResult l1_pose_loss(const Pose& est, const Pose& gt, double alpha = 1.0,
                            double beta = 0.01, double gamma = 1.0);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    void reset(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
};

// One bias-corrected Adam update, in place.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace nn
}  // namespace psvh
