#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "psvh/geometry.hpp"
#include "psvh/nn.hpp"
#include "psvh/silhouette.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

// Auxiliary occupancy maps fed to the refiner: A = V (1 - H) marks
// predicted-but-outside-hull voxels, B = H (1 - V) marks
// in-hull-but-unpredicted voxels.
std::pair<VoxelGrid, VoxelGrid> probability_maps(const VoxelGrid& v, const HullGrid& h);

// Analytic refinement baseline: V' = V (.) H. Suppresses occupancy
// outside the hull and never fills anything in.
VoxelGrid carve_refine(const VoxelGrid& v, const HullGrid& h);

// Toy hull-guided refinement network: a stack of 3D convolutions over
// the 4-channel field [V, H, V(1-H), H(1-V)] with ReLU between layers,
// and a residual connection in logit space:
//     out = sigmoid(z + logit(clamp(V, eps, 1-eps))).
// With the final layer zero-initialized the network is the identity on V.
struct RefinerConfig {
    std::vector<int> channels = {4, 8, 8, 8, 1};  // first 4, last 1
    int ksize = 3;
    double lr = 1e-4;
    int epochs = 10;
    int batch_size = 8;
    std::uint64_t seed = 0;
};

// Clamp for the logit-space residual; loose enough that the network can
// override a confidently wrong coarse voxel.
inline constexpr double kResidualEps = 1e-3;

struct Refiner {
    RefinerConfig config;
    std::vector<nn::Conv3Params> layers;
};

// He-initialized hidden layers, zero final layer. Validates the channel
// plan (starts at 4, ends at 1).
Refiner make_refiner(const RefinerConfig& config);

std::vector<double> flatten_params(const Refiner& r);
void unflatten_params(Refiner& r, const std::vector<double>& flat);

// Parameter blob plus a JSON sidecar (<path>.json) describing the layer
// shapes.
void save_refiner(const std::filesystem::path& path, const Refiner& r);
Refiner load_refiner(const std::filesystem::path& path);

// Activations recorded by the forward pass for backpropagation.
struct RefinerTrace {
    nn::Field4 input;
    std::vector<nn::Field4> pre;   // pre-activation per layer
    std::vector<nn::Field4> post;  // post-ReLU per hidden layer
    std::vector<double> residual_logit;
    std::vector<double> output;
};

VoxelGrid refiner_forward(const Refiner& r, const VoxelGrid& v, const HullGrid& h,
                          RefinerTrace* trace = nullptr);

struct RefinerGrads {
    std::vector<nn::Conv3Params> layers;
    VoxelGrid coarse_grad;  // dL/dV, includes the residual path
    VoxelGrid hull_grad;    // dL/dH
};

RefinerGrads refiner_backward(const Refiner& r, const RefinerTrace& trace,
                              const std::vector<double>& output_grad);

struct TrainSample {
    VoxelGrid coarse;
    HullGrid hull;
    VoxelGrid target;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double holdout_iou_coarse = 0.0;
    double holdout_iou_refined = 0.0;
};

struct TrainResult {
    Refiner model;
    std::vector<EpochStats> log;
};

// Mini-batch Adam on mean BCE against the target grids. Deterministic in
// config.seed (initialization and batch order). Starts from `init` when
// given, otherwise from make_refiner(config).
TrainResult train_refiner(const RefinerConfig& config, const std::vector<TrainSample>& train,
                          const std::vector<TrainSample>& holdout,
                          const Refiner* init = nullptr);

// Gradient descent on the hull-consistency objective
//     L(p) = sum_X [ V (1 - H_p) + lambda (1 - V) H_p ]
// through the hull layer's exact backward pass, with backtracking line
// search. Candidates that put grid corners behind the camera are rejected
// and the step halved. The silhouette must not be binary (blur it first).
struct PoseFitResult {
    Pose pose;
    double best_loss = 0.0;
    std::vector<double> loss_trace;
    int steps_taken = 0;
};

PoseFitResult pose_fit(const VoxelGrid& v, const SilhouetteMap& sil, const CameraIntrinsics& K,
                       const Pose& p0, int steps = 150, double lr = 2e-6, double lambda = 0.1);

}  // namespace psvh
