#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psvh/geometry.hpp"
#include "psvh/silhouette.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

enum class ShapeKind { box, sphere, cylinder, chairoid, tabloid };

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

// Parameters are in cube units; the solid must fit inside [-0.5, 0.5]^3.
// chairoid = seat slab + 4 detached thin legs + back slab; tabloid = top
// slab + 4 detached legs. The legs sit one voxel layer below the slab at
// the reference resolution (D = 32) so they form separate connected
// components, the stand-in for thin structures a coarse predictor loses.
struct ShapeParams {
    Vec3 extents = Vec3(0.5, 0.5, 0.5);  // box: full edge lengths
    double radius = 0.4;                 // sphere and cylinder
    double height = 0.7;                 // cylinder, along y
    double scale = 1.0;                  // chairoid and tabloid
};

// Deterministic binary occupancy: a voxel is set iff its center lies in
// the analytic solid. Throws std::invalid_argument when the solid does
// not fit in the cube.
VoxelGrid make_shape(ShapeKind kind, const ShapeParams& params, int dims);

struct CorruptParams {
    int drop_components = 0;  // how many small components to remove
    int blur_radius = 0;      // 3D box blur radius [voxels]
    double noise_sigma = 0.0; // clamped additive Gaussian noise
};

// Emulates a coarse occupancy prediction: drops small connected
// components (below half the largest component's size), blurs, and adds
// clamped noise. All-zero parameters return the input unchanged.
VoxelGrid corrupt_voxels(const VoxelGrid& gt, std::uint64_t seed, const CorruptParams& params);

// 3D box blur with zero padding.
VoxelGrid box_blur3(const VoxelGrid& v, int radius);

// Gaussian pose noise: rot_sigma_deg on each Euler angle (in degrees),
// trans_sigma on tu/tv in pixels and trans_sigma/100 on tz in cube
// units. A non-positive tz is redrawn (bounded retries).
Pose perturb_pose(const Pose& p, std::uint64_t seed, double rot_sigma_deg, double trans_sigma);

struct NoiseSpec {
    CorruptParams corrupt{1, 1, 0.08};
    double pose_sigma_deg = 5.0;            // recorded for evaluation sweeps
    DegradeParams silhouette{1, 1, 0, 0.0}; // recorded for evaluation sweeps
};

struct DatasetSpec {
    int n_shapes = 20;
    int views_per_shape = 4;
    int dims = 32;
    int image_width = 128;
    int image_height = 128;
    CameraIntrinsics intrinsics{};  // f = 150, principal point at center
    std::uint64_t seed = 0;
    NoiseSpec noise{};
    int threads = 1;  // worker threads; outputs do not depend on it
};

struct Sample {
    std::string id;
    int shape_id = 0;
    int view_id = 0;
    ShapeKind kind = ShapeKind::box;
    std::string split;  // "train" or "test"
    Pose pose;
    VoxelGrid v_gt;
    VoxelGrid v_coarse;
    SilhouetteMap silhouette;
};

// Pose ranges used for dataset views; tighter than the random_pose
// defaults because generated shapes stay within radius 0.6 of the origin.
PoseRanges dataset_pose_ranges();

// Deterministic in spec.seed; each sample's RNG is derived from
// (seed, shape, view). The split assigns the first 80% of shape ids to
// train. Generated silhouettes always contain the shape for the default
// camera and ranges.
std::vector<Sample> generate_samples(const DatasetSpec& spec);

// Writes manifest.json plus per-sample {vgt.grid, vcoarse.grid, sil.pgm,
// pose.json} directories. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> samples;
};

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace psvh
