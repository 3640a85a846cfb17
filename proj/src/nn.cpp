#include "psvh/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psvh {
namespace nn {

namespace {

void check_conv_shapes(const Field4& input, const Conv3Params& p) {
    if (input.channels != p.in_channels) {
        throw std::invalid_argument("conv3d: channel mismatch");
    }
    if (p.ksize % 2 == 0 || p.ksize < 1 || p.ksize > 5) {
        throw std::invalid_argument("conv3d: kernel size must be 1, 3 or 5");
    }
}

}  // namespace

Conv3Params::Conv3Params(int cin, int cout, int k)
    : in_channels(cin),
      out_channels(cout),
      ksize(k),
      weights(static_cast<std::size_t>(cout) * cin * k * k * k, 0.0),
      bias(cout, 0.0) {
    if (k % 2 == 0 || k < 1 || k > 5) {
        throw std::invalid_argument("Conv3Params: kernel size must be 1, 3 or 5");
    }
}

Field4 conv3d_forward(const Field4& input, const Conv3Params& p) {
    check_conv_shapes(input, p);
    const int d = input.dims;
    const int k = p.ksize;
    const int r = k / 2;
    Field4 out(p.out_channels, d);

    for (int co = 0; co < p.out_channels; ++co) {
        double* dst = out.channel(co);
        const double b = p.bias[co];
        for (int z = 0; z < d; ++z) {
            const int kz0 = std::max(0, r - z), kz1 = std::min(k, d + r - z);
            for (int y = 0; y < d; ++y) {
                const int ky0 = std::max(0, r - y), ky1 = std::min(k, d + r - y);
                for (int x = 0; x < d; ++x) {
                    const int kx0 = std::max(0, r - x), kx1 = std::min(k, d + r - x);
                    double acc = b;
                    for (int ci = 0; ci < p.in_channels; ++ci) {
                        const double* src = input.channel(ci);
                        for (int kz = kz0; kz < kz1; ++kz) {
                            for (int ky = ky0; ky < ky1; ++ky) {
                                const double* row =
                                    src + (static_cast<std::size_t>(z + kz - r) * d + (y + ky - r)) * d;
                                const double* wrow =
                                    p.weights.data() + p.weight_index(co, ci, kz, ky, 0);
                                for (int kx = kx0; kx < kx1; ++kx) {
                                    acc += wrow[kx] * row[x + kx - r];
                                }
                            }
                        }
                    }
                    dst[(static_cast<std::size_t>(z) * d + y) * d + x] = acc;
                }
            }
        }
    }
    return out;
}

Conv3Backward conv3d_backward(const Field4& input, const Conv3Params& p,
                              const Field4& output_grad) {
    check_conv_shapes(input, p);
    if (output_grad.channels != p.out_channels || output_grad.dims != input.dims) {
        throw std::invalid_argument("conv3d_backward: output gradient shape mismatch");
    }
    const int d = input.dims;
    const int k = p.ksize;
    const int r = k / 2;

    Conv3Backward out;
    out.input_grad = Field4(p.in_channels, d);
    out.param_grad = Conv3Params(p.in_channels, p.out_channels, k);

    // dL/dx gathered per input voxel: out position = in position - (tap - r)
    for (int ci = 0; ci < p.in_channels; ++ci) {
        double* dst = out.input_grad.channel(ci);
        for (int z = 0; z < d; ++z) {
            const int kz0 = std::max(0, z + r - (d - 1)), kz1 = std::min(k, z + r + 1);
            for (int y = 0; y < d; ++y) {
                const int ky0 = std::max(0, y + r - (d - 1)), ky1 = std::min(k, y + r + 1);
                for (int x = 0; x < d; ++x) {
                    const int kx0 = std::max(0, x + r - (d - 1)), kx1 = std::min(k, x + r + 1);
                    double acc = 0.0;
                    for (int co = 0; co < p.out_channels; ++co) {
                        const double* src = output_grad.channel(co);
                        for (int kz = kz0; kz < kz1; ++kz) {
                            for (int ky = ky0; ky < ky1; ++ky) {
                                const double* row =
                                    src +
                                    (static_cast<std::size_t>(z - kz + r) * d + (y - ky + r)) * d;
                                const double* wrow =
                                    p.weights.data() + p.weight_index(co, ci, kz, ky, 0);
                                for (int kx = kx0; kx < kx1; ++kx) {
                                    acc += wrow[kx] * row[x - kx + r];
                                }
                            }
                        }
                    }
                    dst[(static_cast<std::size_t>(z) * d + y) * d + x] = acc;
                }
            }
        }
    }

    // dL/dw and dL/db
    for (int co = 0; co < p.out_channels; ++co) {
        const double* og = output_grad.channel(co);
        double bacc = 0.0;
        for (std::size_t n = 0; n < output_grad.spatial_size(); ++n) {
            bacc += og[n];
        }
        out.param_grad.bias[co] = bacc;
        for (int ci = 0; ci < p.in_channels; ++ci) {
            const double* src = input.channel(ci);
            for (int kz = 0; kz < k; ++kz) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const int z0 = std::max(0, r - kz), z1 = std::min(d, d + r - kz);
                        const int y0 = std::max(0, r - ky), y1 = std::min(d, d + r - ky);
                        const int x0 = std::max(0, r - kx), x1 = std::min(d, d + r - kx);
                        double acc = 0.0;
                        for (int z = z0; z < z1; ++z) {
                            for (int y = y0; y < y1; ++y) {
                                const double* grow = og + (static_cast<std::size_t>(z) * d + y) * d;
                                const double* irow =
                                    src +
                                    (static_cast<std::size_t>(z + kz - r) * d + (y + ky - r)) * d;
                                for (int x = x0; x < x1; ++x) {
                                    acc += grow[x] * irow[x + kx - r];
                                }
                            }
                        }
                        out.param_grad.weights[p.weight_index(co, ci, kz, ky, kx)] = acc;
                    }
                }
            }
        }
    }
    return out;
}

Field4 sigmoid_forward(const Field4& x) {
    Field4 out = x;
    for (double& v : out.values) {
        v = sigmoid(v);
    }
    return out;
}

Field4 sigmoid_backward(const Field4& output, const Field4& output_grad) {
    Field4 out = output_grad;
    for (std::size_t n = 0; n < out.values.size(); ++n) {
        out.values[n] *= output.values[n] * (1.0 - output.values[n]);
    }
    return out;
}

Field4 relu_forward(const Field4& x) {
    Field4 out = x;
    for (double& v : out.values) {
        v = std::max(v, 0.0);
    }
    return out;
}

Field4 relu_backward(const Field4& input, const Field4& output_grad) {
    Field4 out = output_grad;
    for (std::size_t n = 0; n < out.values.size(); ++n) {
        if (input.values[n] <= 0.0) {
            out.values[n] = 0.0;
        }
    }
    return out;
}

ScalarLoss bce_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size() || pred.empty()) {
        throw std::invalid_argument("bce_loss: shape mismatch");
    }
    constexpr double eps = 1e-7;
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    ScalarLoss out;
    out.grad.resize(pred.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        const double p = std::clamp(pred[n], eps, 1.0 - eps);
        const double t = target[n];
        acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        out.grad[n] = -inv_n * (t / p - (1.0 - t) / (1.0 - p));
    }
    out.value = acc * inv_n;
    return out;
}

namespace {

// Angle wrapped to [0, 2pi) then normalized to [0, 1).
double normalized_angle(double theta) {
    const double two_pi = 2.0 * M_PI;
    double a = std::fmod(theta, two_pi);
    if (a < 0) {
        a += two_pi;
    }
    return a / two_pi;
}

}  // namespace

PoseLossResult l1_pose_loss(const Pose& est, const Pose& gt, double alpha, double beta,
                            double gamma) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("l1_pose_loss: weights must be positive");
    }
    PoseLossResult out;
    const double est_angles[3] = {est.theta1, est.theta2, est.theta3};
    const double gt_angles[3] = {gt.theta1, gt.theta2, gt.theta3};
    const double two_pi = 2.0 * M_PI;
    for (int n = 0; n < 3; ++n) {
        double diff = normalized_angle(est_angles[n]) - normalized_angle(gt_angles[n]);
        diff -= std::floor(diff + 0.5);  // wrap into [-0.5, 0.5)
        out.value += alpha * std::abs(diff);
        if (diff != 0.0 && std::abs(diff) < 0.5 - 1e-15) {
            out.grad[n] = alpha * (diff > 0 ? 1.0 : -1.0) / two_pi;
        }
    }
    const double du = est.tu - gt.tu;
    const double dv = est.tv - gt.tv;
    const double dz = est.tz - gt.tz;
    out.value += beta * (std::abs(du) + std::abs(dv)) + gamma * std::abs(dz);
    out.grad[3] = du == 0.0 ? 0.0 : beta * (du > 0 ? 1.0 : -1.0);
    out.grad[4] = dv == 0.0 ? 0.0 : beta * (dv > 0 ? 1.0 : -1.0);
    out.grad[5] = dz == 0.0 ? 0.0 : gamma * (dz > 0 ? 1.0 : -1.0);
    return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    if (state.m.size() != params.size()) {
        state.reset(params.size());
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t n = 0; n < params.size(); ++n) {
        const double g = grads[n];
        state.m[n] = beta1 * state.m[n] + (1.0 - beta1) * g;
        state.v[n] = beta2 * state.v[n] + (1.0 - beta2) * g * g;
        const double mhat = state.m[n] / c1;
        const double vhat = state.v[n] / c2;
        params[n] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace nn
}  // namespace psvh
