#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "psvh/geometry.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

// ASCII OBJ reader: v and f records, polygons fan-triangulated, negative
// indices resolved against the current vertex count. Other record types
// are ignored. Throws IoError with a line number on parse failures.
Mesh load_obj(const std::filesystem::path& path);

void save_obj(const std::filesystem::path& path, const Mesh& mesh);

Mesh make_box_mesh(const Vec3& min_corner, const Vec3& max_corner);
Mesh make_uv_sphere_mesh(double radius, int rings = 32, int segments = 64);

// Binary occupancy of a watertight mesh: a voxel is occupied iff its
// center is inside, decided by ray-parity casting along +X. The ray
// origin is jittered by a fixed 1e-7 offset so edge/vertex grazes break
// deterministically. Throws std::invalid_argument on an empty mesh.
VoxelGrid voxelize_solid(const Mesh& mesh, int dims);

}  // namespace psvh
