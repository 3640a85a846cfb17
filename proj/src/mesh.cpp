#include "psvh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "psvh/errors.hpp"

namespace psvh {

namespace {

int resolve_obj_index(long raw, std::size_t vertex_count, const std::filesystem::path& path,
                      int line_no) {
    long idx = raw;
    if (idx < 0) {
        idx = static_cast<long>(vertex_count) + idx;  // -1 is the last vertex
    } else {
        idx -= 1;  // OBJ is 1-based
    }
    if (idx < 0 || idx >= static_cast<long>(vertex_count)) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": face index out of range");
    }
    return static_cast<int>(idx);
}

// Parity of +X ray crossings from `origin` against all triangles.
bool inside_by_parity(const Mesh& mesh, const Vec3& origin) {
    int crossings = 0;
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        // Moller-Trumbore specialized to direction (1, 0, 0).
        const Vec3 e1 = b - a;
        const Vec3 e2 = c - a;
        const double px = 0.0, py = -e2.z(), pz = e2.y();  // dir x e2
        const double det = e1.x() * px + e1.y() * py + e1.z() * pz;
        if (std::abs(det) < 1e-15) {
            continue;
        }
        const double inv = 1.0 / det;
        const Vec3 tv = origin - a;
        const double u = (tv.x() * px + tv.y() * py + tv.z() * pz) * inv;
        if (u < 0.0 || u > 1.0) {
            continue;
        }
        const Vec3 q = tv.cross(e1);
        const double v = q.x() * inv;  // dir . q with dir = +X
        if (v < 0.0 || u + v > 1.0) {
            continue;
        }
        const double t = (e2.x() * q.x() + e2.y() * q.y() + e2.z() * q.z()) * inv;
        if (t > 0.0) {
            ++crossings;
        }
    }
    return (crossings % 2) == 1;
}

}  // namespace

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    Mesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag.empty() || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) {
                throw IoError(path.string() + ":" + std::to_string(line_no) +
                              ": malformed vertex record");
            }
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (ss >> token) {
                // take the vertex index before any '/'
                const std::size_t slash = token.find('/');
                const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
                long raw;
                try {
                    raw = std::stol(head);
                } catch (const std::exception&) {
                    throw IoError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed face index '" + token + "'");
                }
                poly.push_back(resolve_obj_index(raw, mesh.vertices.size(), path, line_no));
            }
            if (poly.size() < 3) {
                throw IoError(path.string() + ":" + std::to_string(line_no) +
                              ": face with fewer than 3 vertices");
            }
            for (std::size_t n = 1; n + 1 < poly.size(); ++n) {
                mesh.triangles.push_back({poly[0], poly[n], poly[n + 1]});
            }
        }
        // ignore vn/vt/usemtl/... records
    }
    return mesh;
}

void save_obj(const std::filesystem::path& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto& v : mesh.vertices) {
        os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (const auto& t : mesh.triangles) {
        os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

Mesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
    Mesh m;
    for (int corner = 0; corner < 8; ++corner) {
        m.vertices.emplace_back(corner & 1 ? hi.x() : lo.x(), corner & 2 ? hi.y() : lo.y(),
                                corner & 4 ? hi.z() : lo.z());
    }
    // two triangles per face, outward winding
    const int faces[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

Mesh make_uv_sphere_mesh(double radius, int rings, int segments) {
    Mesh m;
    m.vertices.emplace_back(0, radius, 0);
    for (int r = 1; r < rings; ++r) {
        const double phi = M_PI * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * M_PI * s / segments;
            m.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                                    radius * std::cos(phi),
                                    radius * std::sin(phi) * std::sin(theta));
        }
    }
    m.vertices.emplace_back(0, -radius, 0);
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) {
        m.triangles.push_back({0, ring_vertex(1, s + 1), ring_vertex(1, s)});
        m.triangles.push_back({south, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
    }
    for (int r = 1; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
            const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
            m.triangles.push_back({a, b, d});
            m.triangles.push_back({a, d, c});
        }
    }
    return m;
}

VoxelGrid voxelize_solid(const Mesh& mesh, int dims) {
    if (mesh.triangles.empty() || mesh.vertices.empty()) {
        throw std::invalid_argument("voxelize_solid: empty mesh");
    }
    if (dims < 2) {
        throw std::invalid_argument("voxelize_solid: dims must be >= 2");
    }
    // Fixed sub-voxel jitter; breaks edge/vertex ties the same way on
    // every run.
    const Vec3 jitter(1e-7, 1.3e-7, 0.7e-7);
    VoxelGrid grid(dims);
    for (int k = 0; k < dims; ++k) {
        for (int j = 0; j < dims; ++j) {
            for (int i = 0; i < dims; ++i) {
                const Vec3 origin = voxel_center(i, j, k, dims) + jitter;
                if (inside_by_parity(mesh, origin)) {
                    grid.at(i, j, k) = 1.0;
                }
            }
        }
    }
    return grid;
}

}  // namespace psvh
