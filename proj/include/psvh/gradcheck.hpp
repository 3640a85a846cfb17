#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "psvh/geometry.hpp"
#include "psvh/silhouette.hpp"

namespace psvh {

// Compares the hull layer's analytic gradients against central finite
// differences on a seeded synthetic case: a random box shape is rendered,
// blurred, lifted to a hull, and contracted with random voxel weights.
struct GradCheckCase {
    int dims = 8;
    int image_size = 64;
    int blur_radius = 2;
    bool binarize_silhouette = false;  // forces the ineligible-S path
    std::uint64_t seed = 1;
    double fd_step = 1e-7;
    double pose_tol = 1e-4;
    double silhouette_tol = 1e-6;
    int silhouette_probes = 24;  // pixels checked on the dL/dS path
};

struct GradCheckRow {
    std::string parameter;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    double max_rel_pose = 0.0;
    double max_rel_silhouette = 0.0;
    // False when the silhouette is binary: the bilinear interpolant of a
    // hard mask is piecewise constant almost everywhere, so pose
    // gradients are meaningless and the pose rows are skipped.
    bool pose_eligible = true;
    bool pose_ok = true;
    bool silhouette_ok = true;

    bool ok() const { return pose_ok && silhouette_ok; }
};

GradCheckReport run_gradcheck(const GradCheckCase& c);

// CSV rows: parameter,analytic,numeric,rel_error
void write_gradcheck_csv(std::ostream& os, const GradCheckReport& report);

// Relative error used by every gradient check in this project: element
// deviations are normalized by the largest magnitude in either vector.
double group_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

}  // namespace psvh
