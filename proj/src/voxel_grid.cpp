#include "psvh/voxel_grid.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "psvh/errors.hpp"

namespace psvh {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'V', 'H'};
constexpr std::uint8_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff),
                                   static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

// Opens and validates the container header; returns the count field.
std::uint32_t open_container(std::ifstream& is, const std::filesystem::path& path) {
    is.open(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError(path.string() + ": bad magic bytes");
    }
    char version;
    is.read(&version, 1);
    if (!is || static_cast<std::uint8_t>(version) != kVersion) {
        throw IoError(path.string() + ": unsupported container version");
    }
    const std::uint32_t count = read_u32(is);
    if (!is) {
        throw IoError(path.string() + ": truncated header");
    }
    return count;
}

}  // namespace

Vec3 voxel_center(int i, int j, int k, int dims) {
    if (i < 0 || j < 0 || k < 0 || i >= dims || j >= dims || k >= dims) {
        throw std::out_of_range("voxel_center: index out of range");
    }
    const double pitch = 1.0 / dims;
    return Vec3(-0.5 + (i + 0.5) * pitch, -0.5 + (j + 0.5) * pitch, -0.5 + (k + 0.5) * pitch);
}

VoxelGrid binarize(const VoxelGrid& v, double tau) {
    VoxelGrid out(v.dims);
    for (std::size_t n = 0; n < v.size(); ++n) {
        out.values[n] = v.values[n] >= tau ? 1.0 : 0.0;
    }
    return out;
}

double iou(const VoxelGrid& a, const VoxelGrid& b, double tau) {
    if (a.dims != b.dims) {
        throw std::invalid_argument("iou: dimension mismatch");
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const bool oa = a.values[n] >= tau;
        const bool ob = b.values[n] >= tau;
        inter += oa && ob;
        uni += oa || ob;
    }
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t count_occupied(const VoxelGrid& v, double tau) {
    std::size_t n = 0;
    for (double x : v.values) {
        n += x >= tau;
    }
    return n;
}

void save_grid(const std::filesystem::path& path, const VoxelGrid& grid) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_u32(os, static_cast<std::uint32_t>(grid.dims));
    for (double v : grid.values) {
        write_f32(os, static_cast<float>(v));
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

VoxelGrid load_grid(const std::filesystem::path& path) {
    std::ifstream is;
    const std::uint32_t dims = open_container(is, path);
    if (dims < 2 || dims > 4096) {
        throw IoError(path.string() + ": implausible grid dims");
    }
    VoxelGrid grid(static_cast<int>(dims));
    for (std::size_t n = 0; n < grid.size(); ++n) {
        grid.values[n] = read_f32(is);
    }
    if (!is) {
        throw IoError(path.string() + ": truncated payload");
    }
    return grid;
}

void save_blob(const std::filesystem::path& path, const std::vector<double>& values) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_u32(os, static_cast<std::uint32_t>(values.size()));
    for (double v : values) {
        write_f32(os, static_cast<float>(v));
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<double> load_blob(const std::filesystem::path& path) {
    std::ifstream is;
    const std::uint32_t count = open_container(is, path);
    std::vector<double> values(count);
    for (std::uint32_t n = 0; n < count; ++n) {
        values[n] = read_f32(is);
    }
    if (!is) {
        throw IoError(path.string() + ": truncated payload");
    }
    return values;
}

std::vector<int> connected_components(const VoxelGrid& v, std::vector<std::size_t>& sizes,
                                      double tau) {
    const int d = v.dims;
    std::vector<int> labels(v.size(), -1);
    sizes.clear();
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < v.size(); ++start) {
        if (v.values[start] < tau || labels[start] >= 0) {
            continue;
        }
        const int label = static_cast<int>(sizes.size());
        sizes.push_back(0);
        stack.push_back(start);
        labels[start] = label;
        while (!stack.empty()) {
            const std::size_t n = stack.back();
            stack.pop_back();
            ++sizes[label];
            const int i = static_cast<int>(n % d);
            const int j = static_cast<int>((n / d) % d);
            const int k = static_cast<int>(n / (static_cast<std::size_t>(d) * d));
            const int di[6] = {1, -1, 0, 0, 0, 0};
            const int dj[6] = {0, 0, 1, -1, 0, 0};
            const int dk[6] = {0, 0, 0, 0, 1, -1};
            for (int a = 0; a < 6; ++a) {
                const int ii = i + di[a], jj = j + dj[a], kk = k + dk[a];
                if (ii < 0 || jj < 0 || kk < 0 || ii >= d || jj >= d || kk >= d) {
                    continue;
                }
                const std::size_t m = v.index(ii, jj, kk);
                if (v.values[m] >= tau && labels[m] < 0) {
                    labels[m] = label;
                    stack.push_back(m);
                }
            }
        }
    }
    return labels;
}

}  // namespace psvh
