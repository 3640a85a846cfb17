#include "psvh/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "psvh/errors.hpp"
#include "psvh/rng.hpp"

namespace psvh {

namespace {

// Trilinear sample of a grid at an object-frame point; voxel centers are
// the lattice, everything past the outermost centers reads as 0.
double sample_trilinear(const VoxelGrid& g, const Vec3& p) {
    const int d = g.dims;
    const double gx = (p.x() + 0.5) * d - 0.5;
    const double gy = (p.y() + 0.5) * d - 0.5;
    const double gz = (p.z() + 0.5) * d - 0.5;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const int z0 = static_cast<int>(std::floor(gz));
    const double fx = gx - x0, fy = gy - y0, fz = gz - z0;
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int xi = x0 + (c & 1), yi = y0 + ((c >> 1) & 1), zi = z0 + ((c >> 2) & 1);
        if (xi < 0 || yi < 0 || zi < 0 || xi >= d || yi >= d || zi >= d) {
            continue;
        }
        const double w = (c & 1 ? fx : 1.0 - fx) * ((c >> 1) & 1 ? fy : 1.0 - fy) *
                         ((c >> 2) & 1 ? fz : 1.0 - fz);
        acc += w * g.at(xi, yi, zi);
    }
    return acc;
}

// Slab intersection of a ray with the canonical cube.
bool cube_entry_exit(const Vec3& o, const Vec3& d, double& t0, double& t1) {
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (o[a] < -0.5 || o[a] > 0.5) {
                return false;
            }
            continue;
        }
        double lo = (-0.5 - o[a]) / d[a];
        double hi = (0.5 - o[a]) / d[a];
        if (lo > hi) {
            std::swap(lo, hi);
        }
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
    }
    return t1 > t0;
}

SilhouetteMap max_min_filter(const SilhouetteMap& s, int radius, bool take_max) {
    if (radius <= 0) {
        return s;
    }
    // separable: rows then columns
    SilhouetteMap tmp(s.width, s.height), out(s.width, s.height);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            double v = take_max ? 0.0 : 1.0;
            for (int dx = -radius; dx <= radius; ++dx) {
                const int xx = x + dx;
                const double sample = (xx < 0 || xx >= s.width) ? 0.0 : s.at(xx, y);
                v = take_max ? std::max(v, sample) : std::min(v, sample);
            }
            tmp.at(x, y) = v;
        }
    }
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            double v = take_max ? 0.0 : 1.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                const double sample = (yy < 0 || yy >= s.height) ? 0.0 : tmp.at(x, yy);
                v = take_max ? std::max(v, sample) : std::min(v, sample);
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

}  // namespace

SilhouetteMap render_silhouette(const VoxelGrid& grid, const Pose& pose,
                                const CameraIntrinsics& K, int width, int height) {
    if (!(pose.tz > 0.0)) {
        throw std::invalid_argument("render_silhouette: tz must be positive");
    }
    const RigidTransform T = pose_to_transform(pose, K);
    const Mat3 Rt = T.R.transpose();
    const Vec3 origin = -(Rt * T.t);  // camera center in the object frame
    const int steps = 2 * grid.dims;

    SilhouetteMap out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = x + 0.5, v = y + 0.5;
            const Vec3 dir = Rt * Vec3((u - K.u0) / K.f, (v - K.v0) / K.f, 1.0);
            double t0, t1;
            if (!cube_entry_exit(origin, dir, t0, t1)) {
                continue;
            }
            double best = 0.0;
            const double dt = (t1 - t0) / steps;
            for (int n = 0; n < steps; ++n) {
                const Vec3 p = origin + (t0 + (n + 0.5) * dt) * dir;
                best = std::max(best, sample_trilinear(grid, p));
                if (best >= 1.0) {
                    break;
                }
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

double silhouette_iou(const SilhouetteMap& a, const SilhouetteMap& b, double tau) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("silhouette_iou: dimension mismatch");
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const bool oa = a.values[n] >= tau;
        const bool ob = b.values[n] >= tau;
        inter += oa && ob;
        uni += oa || ob;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

SilhouetteMap box_blur(const SilhouetteMap& s, int radius) {
    if (radius <= 0) {
        return s;
    }
    const double norm = 1.0 / (2 * radius + 1);
    SilhouetteMap tmp(s.width, s.height), out(s.width, s.height);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            double acc = 0.0;
            for (int dx = -radius; dx <= radius; ++dx) {
                const int xx = x + dx;
                if (xx >= 0 && xx < s.width) {
                    acc += s.at(xx, y);
                }
            }
            tmp.at(x, y) = acc * norm;
        }
    }
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy >= 0 && yy < s.height) {
                    acc += tmp.at(x, yy);
                }
            }
            out.at(x, y) = acc * norm;
        }
    }
    return out;
}

SilhouetteMap degrade_silhouette(const SilhouetteMap& s, std::uint64_t seed,
                                 const DegradeParams& p) {
    if (p.blur_radius < 0 || p.dilate_px < 0 || p.erode_px < 0 || p.flip_rate < 0.0) {
        throw std::invalid_argument("degrade_silhouette: parameters must be nonnegative");
    }
    SilhouetteMap out = box_blur(s, p.blur_radius);
    out = max_min_filter(out, p.dilate_px, /*take_max=*/true);
    out = max_min_filter(out, p.erode_px, /*take_max=*/false);
    if (p.flip_rate > 0.0) {
        Rng rng(seed);
        for (double& v : out.values) {
            if (rng.bernoulli(p.flip_rate)) {
                v = 1.0 - v;
            }
        }
    }
    for (double& v : out.values) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

void save_pgm(const std::filesystem::path& path, const SilhouetteMap& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    os << "P5\n" << s.width << ' ' << s.height << "\n255\n";
    for (double v : s.values) {
        os.put(static_cast<char>(static_cast<unsigned char>(
            std::lround(255.0 * std::clamp(v, 0.0, 1.0)))));
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

SilhouetteMap load_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = is.get()) != EOF) {
            if (c == '#') {  // comment to end of line
                while ((c = is.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) {
                    break;
                }
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        return tok;
    };
    if (next_token() != "P5") {
        throw IoError(path.string() + ": not a binary PGM (P5) file");
    }
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PGM header");
    }
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw IoError(path.string() + ": unsupported PGM header");
    }
    SilhouetteMap s(width, height);
    for (std::size_t n = 0; n < s.size(); ++n) {
        const int c = is.get();
        if (c == EOF) {
            throw IoError(path.string() + ": truncated PGM payload");
        }
        s.values[n] = static_cast<double>(c) / 255.0;
    }
    return s;
}

bool is_binary(const SilhouetteMap& s) {
    for (double v : s.values) {
        if (std::abs(v) > 1e-12 && std::abs(v - 1.0) > 1e-12) {
            return false;
        }
    }
    return true;
}

}  // namespace psvh
