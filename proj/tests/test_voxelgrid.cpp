#include <doctest.h>

#include <cmath>
#include <fstream>

#include "psvh/errors.hpp"
#include "psvh/mesh.hpp"
#include "psvh/rng.hpp"
#include "psvh/voxel_grid.hpp"
#include "support.hpp"

using namespace psvh;
using psvh::testing::TempDir;

TEST_SUITE("voxelgrid") {

TEST_CASE("voxel_center formula and symmetry") {
    CHECK((voxel_center(0, 0, 0, 2) - Vec3(-0.25, -0.25, -0.25)).norm() < 1e-15);
    CHECK(voxel_center(15, 15, 15, 32).x() == doctest::Approx(-0.015625));

    Vec3 mean = Vec3::Zero();
    const int d = 8;
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) mean += voxel_center(i, j, k, d);
    CHECK((mean / (d * d * d)).norm() < 1e-14);

    CHECK_THROWS_AS(voxel_center(-1, 0, 0, 8), std::out_of_range);
    CHECK_THROWS_AS(voxel_center(0, 8, 0, 8), std::out_of_range);
}

TEST_CASE("binarize thresholds with >= and is idempotent") {
    VoxelGrid v(4);
    for (double& x : v.values) x = 0.39;
    CHECK(count_occupied(binarize(v)) == 0);
    for (double& x : v.values) x = 0.40;
    CHECK(count_occupied(binarize(v)) == v.size());

    Rng rng(5);
    VoxelGrid r(6);
    for (double& x : r.values) x = rng.uniform();
    const VoxelGrid once = binarize(r);
    const VoxelGrid twice = binarize(once);
    CHECK(once.values == twice.values);
}

TEST_CASE("iou: identity, disjoint, and a counted overlap") {
    VoxelGrid a(4), b(4);
    a.at(0, 0, 0) = 1;
    CHECK(iou(a, a) == doctest::Approx(1.0));

    b.at(3, 3, 3) = 1;
    CHECK(iou(a, b) == doctest::Approx(0.0));

    // 2x2x2 cube against the same cube shifted by one voxel along x:
    // overlap 4, union 12
    VoxelGrid c(4), d(4);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) {
                c.at(i, j, k) = 1;
                d.at(i + 1, j, k) = 1;
            }
    CHECK(iou(c, d) == doctest::Approx(4.0 / 12.0));

    CHECK(iou(VoxelGrid(4), VoxelGrid(4)) == doctest::Approx(1.0));  // both empty
    CHECK_THROWS_AS(iou(VoxelGrid(4), VoxelGrid(8)), std::invalid_argument);
}

TEST_CASE("iou is symmetric and monotone under shared additions") {
    Rng rng(7);
    VoxelGrid a(8), b(8);
    for (std::size_t n = 0; n < a.size(); ++n) {
        a.values[n] = rng.uniform();
        b.values[n] = rng.uniform();
    }
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)));

    const double before = iou(a, b);
    // occupy a shared run of voxels in both grids
    for (std::size_t n = 0; n < 40; ++n) {
        a.values[n] = 1.0;
        b.values[n] = 1.0;
    }
    CHECK(iou(a, b) >= before - 1e-12);
}

TEST_CASE("grid file round trip is lossless and sized as documented") {
    TempDir dir("grid");
    Rng rng(9);
    VoxelGrid v(32);
    for (double& x : v.values) {
        x = static_cast<double>(static_cast<float>(rng.uniform()));  // float32 values
    }
    const auto path = dir.path() / "grid.psvh";
    save_grid(path, v);
    CHECK(std::filesystem::file_size(path) == 9 + 4 * 32 * 32 * 32);

    const VoxelGrid r = load_grid(path);
    CHECK(r.dims == 32);
    CHECK(r.values == v.values);
}

TEST_CASE("grid loader rejects bad magic and truncation") {
    TempDir dir("gridbad");
    const auto bad = dir.path() / "bad.psvh";
    {
        std::ofstream os(bad, std::ios::binary);
        os << "NOPE";
    }
    CHECK_THROWS_AS(load_grid(bad), IoError);

    const auto trunc = dir.path() / "trunc.psvh";
    save_grid(trunc, VoxelGrid(8, 0.5));
    std::filesystem::resize_file(trunc, 100);
    CHECK_THROWS_AS(load_grid(trunc), IoError);

    CHECK_THROWS_AS(load_grid(dir.path() / "missing.psvh"), IoError);
}

TEST_CASE("blob round trip") {
    TempDir dir("blob");
    const std::vector<double> values = {1.0, -2.5, 0.25, 0.0009765625};
    save_blob(dir.path() / "b.psvh", values);
    CHECK(load_blob(dir.path() / "b.psvh") == values);
}

TEST_CASE("load_obj parses a cube and fan-triangulates quads") {
    TempDir dir("obj");
    const auto cube = dir.path() / "cube.obj";
    save_obj(cube, make_box_mesh(Vec3(-0.25, -0.25, -0.25), Vec3(0.25, 0.25, 0.25)));
    const Mesh m = load_obj(cube);
    CHECK(m.vertices.size() == 8);
    CHECK(m.triangles.size() == 12);

    const auto quads = dir.path() / "quads.obj";
    {
        std::ofstream os(quads);
        os << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n";
        os << "f 1 2 3 4\n";      // quad -> 2 triangles
        os << "f 1/1 2/2 3/3\n";  // texture-coordinate syntax
    }
    const Mesh q = load_obj(quads);
    CHECK(q.vertices.size() == 4);
    CHECK(q.triangles.size() == 3);
}

TEST_CASE("load_obj resolves negative indices against the current count") {
    TempDir dir("objneg");
    const auto path = dir.path() / "neg.obj";
    {
        std::ofstream os(path);
        os << "v 0 0 0\nv 1 0 0\nv 0 1 0\n";
        os << "f -3 -2 -1\n";  // same as f 1 2 3
    }
    const Mesh m = load_obj(path);
    REQUIRE(m.triangles.size() == 1);
    CHECK(m.triangles[0][0] == 0);
    CHECK(m.triangles[0][1] == 1);
    CHECK(m.triangles[0][2] == 2);
}

TEST_CASE("load_obj reports the offending line") {
    TempDir dir("objerr");
    const auto path = dir.path() / "bad.obj";
    {
        std::ofstream os(path);
        os << "v 0 0 0\n";
        os << "f 1 2 9\n";
    }
    try {
        load_obj(path);
        FAIL("expected a parse error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("voxelize_solid: centered box occupies exactly the central 16^3") {
    const Mesh box = make_box_mesh(Vec3(-0.25, -0.25, -0.25), Vec3(0.25, 0.25, 0.25));
    const VoxelGrid v = voxelize_solid(box, 32);
    CHECK(count_occupied(v) == 16 * 16 * 16);
    bool all_match = true;
    for (int k = 0; k < 32; ++k)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i) {
                const bool inside = i >= 8 && i < 24 && j >= 8 && j < 24 && k >= 8 && k < 24;
                all_match = all_match && v.at(i, j, k) == (inside ? 1.0 : 0.0);
            }
    CHECK(all_match);
}

TEST_CASE("voxelize_solid: cube-filling box occupies everything") {
    const Mesh box = make_box_mesh(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5));
    CHECK(count_occupied(voxelize_solid(box, 16)) == 16 * 16 * 16);
}

TEST_CASE("voxelize_solid: sphere volume within 2% of the analytic value") {
    const Mesh sphere = make_uv_sphere_mesh(0.4, 48, 96);
    const VoxelGrid v = voxelize_solid(sphere, 32);
    const double analytic = 4.0 / 3.0 * M_PI * 0.4 * 0.4 * 0.4 * 32 * 32 * 32;
    const double counted = static_cast<double>(count_occupied(v));
    CHECK(std::abs(counted - analytic) / analytic < 0.02);
}

TEST_CASE("voxelize_solid rejects empty meshes") {
    CHECK_THROWS_AS(voxelize_solid(Mesh{}, 8), std::invalid_argument);
}

TEST_CASE("voxelized convex solids are 6-connected") {
    for (int variant = 0; variant < 2; ++variant) {
        const Mesh m = variant == 0
                           ? make_box_mesh(Vec3(-0.3, -0.2, -0.35), Vec3(0.25, 0.4, 0.1))
                           : make_uv_sphere_mesh(0.35, 32, 64);
        const VoxelGrid v = voxelize_solid(m, 24);
        std::vector<std::size_t> sizes;
        connected_components(v, sizes, 0.5);
        CHECK(sizes.size() == 1);
    }
}

}  // TEST_SUITE
