#include "psvh/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "psvh/datagen.hpp"
#include "psvh/psvh_layer.hpp"
#include "psvh/rng.hpp"
#include "psvh/voxel_grid.hpp"

namespace psvh {

namespace {

double weighted_sum(const HullGrid& h, const std::vector<double>& w) {
    return std::inner_product(h.values.begin(), h.values.end(), w.begin(), 0.0);
}

Pose shifted(const Pose& p, int param, double delta) {
    Pose q = p;
    double* fields[6] = {&q.theta1, &q.theta2, &q.theta3, &q.tu, &q.tv, &q.tz};
    *fields[param] += delta;
    return q;
}

}  // namespace

double group_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double scale = 1e-12, worst = 0.0;
    for (std::size_t n = 0; n < analytic.size(); ++n) {
        scale = std::max({scale, std::abs(analytic[n]), std::abs(numeric[n])});
    }
    for (std::size_t n = 0; n < analytic.size(); ++n) {
        worst = std::max(worst, std::abs(analytic[n] - numeric[n]) / scale);
    }
    return worst;
}

GradCheckReport run_gradcheck(const GradCheckCase& c) {
    Rng rng(c.seed);

    CameraIntrinsics K;
    K.u0 = c.image_size / 2.0;
    K.v0 = c.image_size / 2.0;

    ShapeParams sp;
    sp.extents = Vec3(rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7));
    const VoxelGrid shape = make_shape(ShapeKind::box, sp, 16);

    PoseRanges ranges;
    ranges.dist_min = 1.9;
    ranges.dist_max = 2.5;
    ranges.roll_min = -0.3;
    ranges.roll_max = 0.3;
    ranges.center_jitter_px = 3.0;
    const Pose pose = random_pose(rng.next_u64(), ranges);

    SilhouetteMap sil =
        render_silhouette(shape, pose, K, c.image_size, c.image_size);
    sil = box_blur(sil, c.blur_radius);
    if (c.binarize_silhouette) {
        for (double& v : sil.values) {
            v = v >= 0.5 ? 1.0 : 0.0;
        }
    }

    // random contraction weights define the scalar loss L = sum w * H
    std::vector<double> w(static_cast<std::size_t>(c.dims) * c.dims * c.dims);
    for (double& v : w) {
        v = rng.uniform(-1.0, 1.0);
    }
    HullGrid weights(c.dims);
    weights.values = w;

    const auto loss_at = [&](const Pose& p) {
        return weighted_sum(hull::forward(sil, p, K, c.dims), w);
    };

    GradCheckReport report;
    report.pose_eligible = !is_binary(sil);

    const hull::Backward back = hull::backward_exact(weights, sil, pose, K);

    if (report.pose_eligible) {
        static const char* names[6] = {"theta1", "theta2", "theta3", "tu", "tv", "tz"};
        std::vector<double> analytic(6), numeric(6);
        for (int n = 0; n < 6; ++n) {
            analytic[n] = back.pose_grad[n];
            numeric[n] = (loss_at(shifted(pose, n, c.fd_step)) -
                          loss_at(shifted(pose, n, -c.fd_step))) /
                         (2.0 * c.fd_step);
        }
        double denom = 1e-12;
        for (int n = 0; n < 6; ++n) {
            denom = std::max({denom, std::abs(analytic[n]), std::abs(numeric[n])});
        }
        for (int n = 0; n < 6; ++n) {
            GradCheckRow row;
            row.parameter = names[n];
            row.analytic = analytic[n];
            row.numeric = numeric[n];
            row.rel_error = std::abs(analytic[n] - numeric[n]) / denom;
            report.max_rel_pose = std::max(report.max_rel_pose, row.rel_error);
            report.rows.push_back(row);
        }
        report.pose_ok = report.max_rel_pose < c.pose_tol;
    }

    // dL/dS path: probe the pixels carrying the largest scattered gradient.
    // The forward map is linear in S, so central differences are exact up
    // to rounding.
    std::vector<std::size_t> order(back.silhouette_grad.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(back.silhouette_grad.values[a]) > std::abs(back.silhouette_grad.values[b]);
    });
    const int probes = std::min<std::size_t>(c.silhouette_probes, order.size());
    std::vector<double> sil_analytic, sil_numeric;
    for (int n = 0; n < probes; ++n) {
        const std::size_t pix = order[n];
        SilhouetteMap plus = sil, minus = sil;
        plus.values[pix] += c.fd_step;
        minus.values[pix] -= c.fd_step;
        const double fd = (weighted_sum(hull::forward(plus, pose, K, c.dims), w) -
                           weighted_sum(hull::forward(minus, pose, K, c.dims), w)) /
                          (2.0 * c.fd_step);
        sil_analytic.push_back(back.silhouette_grad.values[pix]);
        sil_numeric.push_back(fd);
    }
    double denom = 1e-12;
    for (std::size_t n = 0; n < sil_analytic.size(); ++n) {
        denom = std::max({denom, std::abs(sil_analytic[n]), std::abs(sil_numeric[n])});
    }
    for (int n = 0; n < probes; ++n) {
        const std::size_t pix = order[n];
        GradCheckRow row;
        row.parameter = "S[" + std::to_string(pix % sil.width) + "," +
                        std::to_string(pix / sil.width) + "]";
        row.analytic = sil_analytic[n];
        row.numeric = sil_numeric[n];
        row.rel_error = std::abs(sil_analytic[n] - sil_numeric[n]) / denom;
        report.max_rel_silhouette = std::max(report.max_rel_silhouette, row.rel_error);
        report.rows.push_back(row);
    }
    report.silhouette_ok = report.max_rel_silhouette < c.silhouette_tol;
    return report;
}

void write_gradcheck_csv(std::ostream& os, const GradCheckReport& report) {
    os << "parameter,analytic,numeric,rel_error\n";
    os.precision(12);
    for (const auto& row : report.rows) {
        os << row.parameter << ',' << row.analytic << ',' << row.numeric << ',' << row.rel_error
           << '\n';
    }
}

}  // namespace psvh
