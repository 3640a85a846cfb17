#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "psvh/geometry.hpp"

namespace psvh::testing {

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Element deviations normalized by the largest magnitude in either vector.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double scale = 1e-12, worst = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        scale = std::max({scale, std::abs(a[n]), std::abs(b[n])});
    }
    for (std::size_t n = 0; n < a.size(); ++n) {
        worst = std::max(worst, std::abs(a[n] - b[n]) / scale);
    }
    return worst;
}

inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({1e-12, std::abs(a), std::abs(b)});
}

inline psvh::Pose shift_pose(const psvh::Pose& p, int param, double delta) {
    psvh::Pose q = p;
    double* fields[6] = {&q.theta1, &q.theta2, &q.theta3, &q.tu, &q.tv, &q.tz};
    *fields[param] += delta;
    return q;
}

// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("psvh_test_" + tag + "_" + std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

}  // namespace psvh::testing
