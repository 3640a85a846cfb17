#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "psvh/geometry.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

// W x H per-pixel foreground-probability image, row-major (x fastest).
struct SilhouetteMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    SilhouetteMap() = default;
    SilhouetteMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    double& at(int x, int y) { return values[index(x, y)]; }
    double at(int x, int y) const { return values[index(x, y)]; }
    std::size_t size() const { return values.size(); }
};

// Ray-marched silhouette of an occupancy grid. For every pixel the camera
// ray is intersected with the canonical cube and the grid is sampled by
// trilinear interpolation at 2*dims uniform steps across the intersection;
// the pixel takes the maximum sample. Rays that miss the cube give 0.
// Pixel (x, y) corresponds to image coordinates (x + 0.5, y + 0.5).
SilhouetteMap render_silhouette(const VoxelGrid& grid, const Pose& pose,
                                const CameraIntrinsics& K, int width = 128, int height = 128);

// Binarized 2D IoU at tau; two empty masks compare as 1.
double silhouette_iou(const SilhouetteMap& a, const SilhouetteMap& b, double tau = 0.5);

struct DegradeParams {
    int blur_radius = 0;    // box blur window radius [px]
    int dilate_px = 0;      // grayscale max-filter radius
    int erode_px = 0;       // grayscale min-filter radius
    double flip_rate = 0.0; // per-pixel Bernoulli probability of v -> 1-v
};

// Applies blur, then dilation, then erosion, then random flips.
// All-zero parameters return the input unchanged. Deterministic in seed.
SilhouetteMap degrade_silhouette(const SilhouetteMap& s, std::uint64_t seed,
                                 const DegradeParams& params);

// Separable box blur with zero padding; radius 0 is the identity.
SilhouetteMap box_blur(const SilhouetteMap& s, int radius);

// 8-bit binary PGM (P5); stored byte = round(255 * v).
void save_pgm(const std::filesystem::path& path, const SilhouetteMap& s);
SilhouetteMap load_pgm(const std::filesystem::path& path);

// True when every value is 0 or 1 (within 1e-12); such maps carry no
// usable pose gradient.
bool is_binary(const SilhouetteMap& s);

}  // namespace psvh
