#include "psvh/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "psvh/errors.hpp"
#include "psvh/rng.hpp"
#include "psvh/serialize.hpp"

namespace psvh {

namespace {

constexpr double kMaxShapeRadius = 0.61;  // keeps shapes in frame at tz >= 1.7

struct Box {
    Vec3 lo, hi;  // half-open [lo, hi)
    bool contains(const Vec3& p) const {
        return p.x() >= lo.x() && p.x() < hi.x() && p.y() >= lo.y() && p.y() < hi.y() &&
               p.z() >= lo.z() && p.z() < hi.z();
    }
    double radius() const { return std::max(lo.norm(), hi.norm()); }
};

// chairoid / tabloid assemblies, in 1/32 cube units so that the default
// shapes land exactly on voxel boundaries at D = 32
std::vector<Box> chairoid_boxes(double s) {
    const double u = s / 32.0;
    std::vector<Box> parts;
    parts.push_back({Vec3(-10 * u, -1 * u, -10 * u), Vec3(10 * u, 1 * u, 10 * u)});  // seat
    for (int cx = 0; cx < 2; ++cx) {
        for (int cz = 0; cz < 2; ++cz) {
            const double x0 = cx ? 7 * u : -9 * u;
            const double z0 = cz ? 7 * u : -9 * u;
            parts.push_back({Vec3(x0, -12 * u, z0), Vec3(x0 + 2 * u, -2 * u, z0 + 2 * u)});
        }
    }
    parts.push_back({Vec3(-10 * u, 1 * u, 7 * u), Vec3(10 * u, 11 * u, 9 * u)});  // back
    return parts;
}

std::vector<Box> tabloid_boxes(double s) {
    const double u = s / 32.0;
    std::vector<Box> parts;
    parts.push_back({Vec3(-11 * u, 2 * u, -11 * u), Vec3(11 * u, 4 * u, 11 * u)});  // top
    for (int cx = 0; cx < 2; ++cx) {
        for (int cz = 0; cz < 2; ++cz) {
            const double x0 = cx ? 8 * u : -10 * u;
            const double z0 = cz ? 8 * u : -10 * u;
            parts.push_back({Vec3(x0, -10 * u, z0), Vec3(x0 + 2 * u, 1 * u, z0 + 2 * u)});
        }
    }
    return parts;
}

ShapeParams random_shape_params(ShapeKind kind, Rng& rng) {
    ShapeParams p;
    switch (kind) {
        case ShapeKind::box:
            p.extents = Vec3(rng.uniform(0.3, 0.55), rng.uniform(0.3, 0.55),
                             rng.uniform(0.3, 0.55));
            break;
        case ShapeKind::sphere:
            p.radius = rng.uniform(0.25, 0.42);
            break;
        case ShapeKind::cylinder:
            p.radius = rng.uniform(0.15, 0.28);
            p.height = rng.uniform(0.45, 0.75);
            break;
        case ShapeKind::chairoid:
        case ShapeKind::tabloid:
            p.scale = rng.uniform(0.85, 1.1);
            break;
    }
    return p;
}

std::string sample_id(int shape, int view) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04d_v%02d", shape, view);
    return buf;
}

}  // namespace

std::string to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::box: return "box";
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::cylinder: return "cylinder";
        case ShapeKind::chairoid: return "chairoid";
        case ShapeKind::tabloid: return "tabloid";
    }
    return "box";
}

ShapeKind shape_kind_from_string(const std::string& name) {
    if (name == "box") return ShapeKind::box;
    if (name == "sphere") return ShapeKind::sphere;
    if (name == "cylinder") return ShapeKind::cylinder;
    if (name == "chairoid") return ShapeKind::chairoid;
    if (name == "tabloid") return ShapeKind::tabloid;
    throw std::invalid_argument("unknown shape kind: " + name);
}

VoxelGrid make_shape(ShapeKind kind, const ShapeParams& p, int dims) {
    auto ensure = [](bool ok) {
        if (!ok) {
            throw std::invalid_argument("make_shape: solid does not fit in the unit cube");
        }
    };

    std::vector<Box> parts;
    switch (kind) {
        case ShapeKind::box: {
            ensure(p.extents.minCoeff() >= 0.0 && p.extents.maxCoeff() <= 1.0);
            parts.push_back({-p.extents / 2.0, p.extents / 2.0});
            break;
        }
        case ShapeKind::sphere:
            ensure(p.radius >= 0.0 && p.radius <= 0.5);
            break;
        case ShapeKind::cylinder:
            ensure(p.radius >= 0.0 && p.radius <= 0.5 && p.height >= 0.0 && p.height <= 1.0);
            break;
        case ShapeKind::chairoid:
            parts = chairoid_boxes(p.scale);
            break;
        case ShapeKind::tabloid:
            parts = tabloid_boxes(p.scale);
            break;
    }
    for (const Box& b : parts) {
        ensure(b.lo.cwiseAbs().maxCoeff() <= 0.5 && b.hi.cwiseAbs().maxCoeff() <= 0.5);
    }

    VoxelGrid grid(dims);
    for (int k = 0; k < dims; ++k) {
        for (int j = 0; j < dims; ++j) {
            for (int i = 0; i < dims; ++i) {
                const Vec3 c = voxel_center(i, j, k, dims);
                bool inside = false;
                switch (kind) {
                    case ShapeKind::sphere:
                        inside = c.norm() < p.radius;
                        break;
                    case ShapeKind::cylinder:
                        inside = std::hypot(c.x(), c.z()) < p.radius &&
                                 std::abs(c.y()) < p.height / 2.0;
                        break;
                    default:
                        for (const Box& b : parts) {
                            if (b.contains(c)) {
                                inside = true;
                                break;
                            }
                        }
                }
                if (inside) {
                    grid.at(i, j, k) = 1.0;
                }
            }
        }
    }
    return grid;
}

VoxelGrid box_blur3(const VoxelGrid& v, int radius) {
    if (radius <= 0) {
        return v;
    }
    const int d = v.dims;
    const double norm = 1.0 / (2 * radius + 1);
    VoxelGrid a = v, b(d);
    // three separable passes: x, then y, then z
    for (int axis = 0; axis < 3; ++axis) {
        for (int k = 0; k < d; ++k) {
            for (int j = 0; j < d; ++j) {
                for (int i = 0; i < d; ++i) {
                    double acc = 0.0;
                    for (int o = -radius; o <= radius; ++o) {
                        int ii = i, jj = j, kk = k;
                        (axis == 0 ? ii : axis == 1 ? jj : kk) += o;
                        if (ii < 0 || jj < 0 || kk < 0 || ii >= d || jj >= d || kk >= d) {
                            continue;
                        }
                        acc += a.at(ii, jj, kk);
                    }
                    b.at(i, j, k) = acc * norm;
                }
            }
        }
        std::swap(a, b);
    }
    return a;
}

VoxelGrid corrupt_voxels(const VoxelGrid& gt, std::uint64_t seed, const CorruptParams& p) {
    if (p.drop_components < 0 || p.blur_radius < 0 || p.noise_sigma < 0.0) {
        throw std::invalid_argument("corrupt_voxels: parameters must be nonnegative");
    }
    Rng rng(seed);
    VoxelGrid out = gt;

    if (p.drop_components > 0) {
        std::vector<std::size_t> sizes;
        const std::vector<int> labels = connected_components(out, sizes, 0.5);
        if (!sizes.empty()) {
            const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
            std::vector<int> candidates;
            for (int c = 0; c < static_cast<int>(sizes.size()); ++c) {
                if (sizes[c] < largest / 2 + (largest % 2)) {
                    candidates.push_back(c);
                }
            }
            // Fisher-Yates prefix of length drop_components
            for (int n = 0; n < p.drop_components && !candidates.empty(); ++n) {
                const int pick = rng.uniform_int(0, static_cast<int>(candidates.size()) - 1);
                const int victim = candidates[pick];
                candidates.erase(candidates.begin() + pick);
                for (std::size_t m = 0; m < out.size(); ++m) {
                    if (labels[m] == victim) {
                        out.values[m] = 0.0;
                    }
                }
            }
        }
    }

    out = box_blur3(out, p.blur_radius);

    if (p.noise_sigma > 0.0) {
        for (double& v : out.values) {
            v = std::clamp(v + rng.normal(0.0, p.noise_sigma), 0.0, 1.0);
        }
    }
    return out;
}

Pose perturb_pose(const Pose& p, std::uint64_t seed, double rot_sigma_deg, double trans_sigma) {
    if (rot_sigma_deg < 0.0 || trans_sigma < 0.0) {
        throw std::invalid_argument("perturb_pose: sigmas must be nonnegative");
    }
    Rng rng(seed);
    const double rot_sigma = rot_sigma_deg * M_PI / 180.0;
    Pose out = p;
    out.theta1 += rng.normal(0.0, rot_sigma);
    out.theta2 += rng.normal(0.0, rot_sigma);
    out.theta3 += rng.normal(0.0, rot_sigma);
    out.tu += rng.normal(0.0, trans_sigma);
    out.tv += rng.normal(0.0, trans_sigma);
    for (int tries = 0;; ++tries) {
        const double tz = p.tz + rng.normal(0.0, trans_sigma / 100.0);
        if (tz > 0.0) {
            out.tz = tz;
            break;
        }
        if (tries >= 64) {
            throw std::runtime_error("perturb_pose: could not draw a positive tz");
        }
    }
    return out;
}

PoseRanges dataset_pose_ranges() {
    PoseRanges r;
    r.dist_min = 1.7;
    r.dist_max = 2.3;
    r.roll_min = -0.17453292519943295;  // -10 deg
    r.roll_max = 0.17453292519943295;
    r.center_jitter_px = 5.0;
    return r;
}

std::vector<Sample> generate_samples(const DatasetSpec& spec) {
    if (spec.n_shapes < 1 || spec.views_per_shape < 1) {
        throw std::invalid_argument("generate_samples: need at least one shape and view");
    }
    const int train_shapes = (spec.n_shapes * 4 + 4) / 5;  // ceil(0.8 n)
    const ShapeKind kinds[5] = {ShapeKind::box, ShapeKind::sphere, ShapeKind::cylinder,
                                ShapeKind::chairoid, ShapeKind::tabloid};

    std::vector<Sample> samples(static_cast<std::size_t>(spec.n_shapes) * spec.views_per_shape);
    auto build_shape = [&](int sid) {
        Rng shape_rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(sid), 0x5348u);
        const ShapeKind kind = kinds[sid % 5];
        const ShapeParams params = random_shape_params(kind, shape_rng);
        const VoxelGrid v_gt = make_shape(kind, params, spec.dims);

        for (int vid = 0; vid < spec.views_per_shape; ++vid) {
            Sample s;
            s.id = sample_id(sid, vid);
            s.shape_id = sid;
            s.view_id = vid;
            s.kind = kind;
            s.split = sid < train_shapes ? "train" : "test";
            s.v_gt = v_gt;
            Rng view_rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(sid),
                                       0x5600u + static_cast<std::uint64_t>(vid));
            s.pose = random_pose(view_rng.next_u64(), dataset_pose_ranges());
            s.silhouette = render_silhouette(v_gt, s.pose, spec.intrinsics, spec.image_width,
                                             spec.image_height);
            s.v_coarse = corrupt_voxels(v_gt, view_rng.next_u64(), spec.noise.corrupt);
            samples[static_cast<std::size_t>(sid) * spec.views_per_shape + vid] = std::move(s);
        }
    };

    // Every sample has its own RNG stream, so splitting shapes across
    // threads cannot change the outputs.
    const int workers = std::clamp(spec.threads, 1, spec.n_shapes);
    if (workers == 1) {
        for (int sid = 0; sid < spec.n_shapes; ++sid) {
            build_shape(sid);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int sid = next.fetch_add(1); sid < spec.n_shapes; sid = next.fetch_add(1)) {
                    build_shape(sid);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return samples;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    const std::vector<Sample> samples = generate_samples(spec);

    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["dims"] = spec.dims;
    manifest["image"] = {{"width", spec.image_width}, {"height", spec.image_height}};
    manifest["intrinsics"] = intrinsics_to_json(spec.intrinsics);
    manifest["seed"] = spec.seed;
    manifest["n_shapes"] = spec.n_shapes;
    manifest["views_per_shape"] = spec.views_per_shape;
    manifest["noise"] = noise_spec_to_json(spec.noise);

    nlohmann::json list = nlohmann::json::array();
    for (const Sample& s : samples) {
        const std::filesystem::path sdir = dir / s.id;
        std::filesystem::create_directories(sdir, ec);
        if (ec) {
            throw IoError("cannot create " + sdir.string() + ": " + ec.message());
        }
        save_grid(sdir / "vgt.grid", s.v_gt);
        save_grid(sdir / "vcoarse.grid", s.v_coarse);
        save_pgm(sdir / "sil.pgm", s.silhouette);
        save_json(sdir / "pose.json", pose_to_json(s.pose));
        list.push_back({{"id", s.id},
                        {"shape", s.shape_id},
                        {"view", s.view_id},
                        {"kind", to_string(s.kind)},
                        {"split", s.split},
                        {"dir", s.id}});
    }
    manifest["samples"] = std::move(list);

    const std::filesystem::path manifest_path = dir / "manifest.json";
    save_json(manifest_path, manifest);
    return manifest_path;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const nlohmann::json manifest = load_json(dir / "manifest.json");
    Dataset ds;
    ds.spec.dims = manifest.at("dims").get<int>();
    ds.spec.image_width = manifest.at("image").at("width").get<int>();
    ds.spec.image_height = manifest.at("image").at("height").get<int>();
    ds.spec.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
    ds.spec.seed = manifest.at("seed").get<std::uint64_t>();
    ds.spec.n_shapes = manifest.at("n_shapes").get<int>();
    ds.spec.views_per_shape = manifest.at("views_per_shape").get<int>();
    ds.spec.noise = noise_spec_from_json(manifest.at("noise"));

    for (const auto& entry : manifest.at("samples")) {
        Sample s;
        s.id = entry.at("id").get<std::string>();
        s.shape_id = entry.at("shape").get<int>();
        s.view_id = entry.at("view").get<int>();
        s.kind = shape_kind_from_string(entry.at("kind").get<std::string>());
        s.split = entry.at("split").get<std::string>();
        const std::filesystem::path sdir = dir / entry.at("dir").get<std::string>();
        s.v_gt = load_grid(sdir / "vgt.grid");
        s.v_coarse = load_grid(sdir / "vcoarse.grid");
        s.silhouette = load_pgm(sdir / "sil.pgm");
        s.pose = pose_from_json(load_json(sdir / "pose.json"));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace psvh
