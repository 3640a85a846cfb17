#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psvh/geometry.hpp"

namespace psvh {

// D^3 occupancy-probability field over the canonical cube [-0.5, 0.5]^3,
// stored x-fastest. Values live in [0, 1].
struct VoxelGrid {
    int dims = 0;
    std::vector<double> values;

    VoxelGrid() = default;
    explicit VoxelGrid(int d, double fill = 0.0)
        : dims(d), values(static_cast<std::size_t>(d) * d * d, fill) {}

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims + j) * dims + i;
    }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    std::size_t size() const { return values.size(); }
};

// A hull grid shares the voxel-grid layout; its values are sampled
// silhouette probabilities.
using HullGrid = VoxelGrid;

// Object-frame center of voxel (i, j, k). Throws std::out_of_range for
// indices outside [0, dims).
Vec3 voxel_center(int i, int j, int k, int dims);

// Value 1 where v >= tau, else 0.
VoxelGrid binarize(const VoxelGrid& v, double tau = 0.4);

// Volumetric IoU after binarizing both grids at tau. Two empty grids
// compare as 1. Throws std::invalid_argument on dimension mismatch.
double iou(const VoxelGrid& a, const VoxelGrid& b, double tau = 0.4);

std::size_t count_occupied(const VoxelGrid& v, double tau = 0.4);

// Binary container: magic "PSVH", version byte 1, a 4-byte little-endian
// unsigned count, then count 32-bit little-endian IEEE floats.
// For grids the count field holds D and the payload has D^3 values.
void save_grid(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid load_grid(const std::filesystem::path& path);

// Same container with count = number of values; used for flat parameter
// blobs.
void save_blob(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> load_blob(const std::filesystem::path& path);

// 6-connected components of the occupied set (>= tau). Returns per-voxel
// component labels (-1 for empty) and fills sizes[label].
std::vector<int> connected_components(const VoxelGrid& v, std::vector<std::size_t>& sizes,
                                      double tau = 0.4);

}  // namespace psvh
