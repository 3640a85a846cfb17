#include "psvh/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "psvh/errors.hpp"
#include "psvh/psvh_layer.hpp"
#include "psvh/rng.hpp"
#include "psvh/serialize.hpp"

namespace psvh {

namespace {

void check_same_dims(const VoxelGrid& a, const VoxelGrid& b, const char* where) {
    if (a.dims != b.dims) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    }
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::pair<VoxelGrid, VoxelGrid> probability_maps(const VoxelGrid& v, const HullGrid& h) {
    check_same_dims(v, h, "probability_maps");
    VoxelGrid a(v.dims), b(v.dims);
    for (std::size_t n = 0; n < v.size(); ++n) {
        a.values[n] = v.values[n] * (1.0 - h.values[n]);
        b.values[n] = h.values[n] * (1.0 - v.values[n]);
    }
    return {std::move(a), std::move(b)};
}

VoxelGrid carve_refine(const VoxelGrid& v, const HullGrid& h) {
    check_same_dims(v, h, "carve_refine");
    VoxelGrid out(v.dims);
    for (std::size_t n = 0; n < v.size(); ++n) {
        out.values[n] = v.values[n] * h.values[n];
    }
    return out;
}

Refiner make_refiner(const RefinerConfig& config) {
    if (config.channels.size() < 2 || config.channels.front() != 4 || config.channels.back() != 1) {
        throw std::invalid_argument("make_refiner: channel plan must run from 4 to 1");
    }
    Refiner r;
    r.config = config;
    Rng rng(config.seed);
    for (std::size_t l = 0; l + 1 < config.channels.size(); ++l) {
        nn::Conv3Params layer(config.channels[l], config.channels[l + 1], config.ksize);
        const bool last = l + 2 == config.channels.size();
        if (!last) {
            const double stddev =
                std::sqrt(2.0 / (layer.in_channels * std::pow(config.ksize, 3)));
            for (double& w : layer.weights) {
                w = rng.normal(0.0, stddev);
            }
        }
        // final layer stays zero: the residual makes the network an
        // identity at initialization
        r.layers.push_back(std::move(layer));
    }
    return r;
}

std::vector<double> flatten_params(const Refiner& r) {
    std::vector<double> flat;
    for (const auto& layer : r.layers) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void unflatten_params(Refiner& r, const std::vector<double>& flat) {
    std::size_t off = 0;
    for (auto& layer : r.layers) {
        std::copy_n(flat.begin() + off, layer.weights.size(), layer.weights.begin());
        off += layer.weights.size();
        std::copy_n(flat.begin() + off, layer.bias.size(), layer.bias.begin());
        off += layer.bias.size();
    }
    if (off != flat.size()) {
        throw std::invalid_argument("unflatten_params: size mismatch");
    }
}

void save_refiner(const std::filesystem::path& path, const Refiner& r) {
    save_blob(path, flatten_params(r));
    nlohmann::json meta;
    meta["channels"] = r.config.channels;
    meta["ksize"] = r.config.ksize;
    meta["lr"] = r.config.lr;
    meta["seed"] = r.config.seed;
    nlohmann::json layers = nlohmann::json::array();
    std::size_t off = 0;
    for (const auto& layer : r.layers) {
        layers.push_back({{"in", layer.in_channels},
                          {"out", layer.out_channels},
                          {"weights", layer.weights.size()},
                          {"bias", layer.bias.size()},
                          {"offset", off}});
        off += layer.weights.size() + layer.bias.size();
    }
    meta["layers"] = std::move(layers);
    meta["total"] = off;
    save_json(path.string() + ".json", meta);
}

Refiner load_refiner(const std::filesystem::path& path) {
    const nlohmann::json meta = load_json(path.string() + ".json");
    RefinerConfig config;
    config.channels = meta.at("channels").get<std::vector<int>>();
    config.ksize = meta.at("ksize").get<int>();
    if (meta.contains("lr")) {
        config.lr = meta.at("lr").get<double>();
    }
    Refiner r;
    r.config = config;
    for (std::size_t l = 0; l + 1 < config.channels.size(); ++l) {
        r.layers.emplace_back(config.channels[l], config.channels[l + 1], config.ksize);
    }
    const std::vector<double> flat = load_blob(path);
    const std::size_t expected = meta.at("total").get<std::size_t>();
    if (flat.size() != expected) {
        throw IoError(path.string() + ": parameter count does not match sidecar");
    }
    unflatten_params(r, flat);
    return r;
}

VoxelGrid refiner_forward(const Refiner& r, const VoxelGrid& v, const HullGrid& h,
                          RefinerTrace* trace) {
    check_same_dims(v, h, "refiner_forward");
    const int d = v.dims;
    nn::Field4 x(4, d);
    const std::size_t n3 = x.spatial_size();
    for (std::size_t n = 0; n < n3; ++n) {
        const double vv = v.values[n], hh = h.values[n];
        x.values[n] = vv;
        x.values[n3 + n] = hh;
        x.values[2 * n3 + n] = vv * (1.0 - hh);
        x.values[3 * n3 + n] = hh * (1.0 - vv);
    }

    RefinerTrace local;
    RefinerTrace& t = trace ? *trace : local;
    t.input = x;
    t.pre.clear();
    t.post.clear();

    nn::Field4 cur = x;
    for (std::size_t l = 0; l < r.layers.size(); ++l) {
        nn::Field4 z = nn::conv3d_forward(cur, r.layers[l]);
        t.pre.push_back(z);
        if (l + 1 < r.layers.size()) {
            cur = nn::relu_forward(z);
            t.post.push_back(cur);
        } else {
            cur = std::move(z);
        }
    }
    if (cur.channels != 1) {
        throw std::invalid_argument("refiner_forward: network must end in one channel");
    }

    t.residual_logit.resize(n3);
    t.output.resize(n3);
    VoxelGrid out(d);
    for (std::size_t n = 0; n < n3; ++n) {
        const double base = logit(std::clamp(v.values[n], kResidualEps, 1.0 - kResidualEps));
        t.residual_logit[n] = base;
        const double o = nn::sigmoid(cur.values[n] + base);
        t.output[n] = o;
        out.values[n] = o;
    }
    return out;
}

RefinerGrads refiner_backward(const Refiner& r, const RefinerTrace& trace,
                              const std::vector<double>& output_grad) {
    const int d = trace.input.dims;
    const std::size_t n3 = trace.input.spatial_size();
    if (output_grad.size() != n3) {
        throw std::invalid_argument("refiner_backward: output gradient shape mismatch");
    }

    RefinerGrads grads;
    grads.layers.reserve(r.layers.size());

    // through the output sigmoid
    nn::Field4 dz(1, d);
    std::vector<double> dresidual(n3);
    for (std::size_t n = 0; n < n3; ++n) {
        const double o = trace.output[n];
        const double g = output_grad[n] * o * (1.0 - o);
        dz.values[n] = g;
        dresidual[n] = g;  // d(z + base)/dbase = 1
    }

    // walk the conv stack backwards
    std::vector<nn::Conv3Params> layer_grads(r.layers.size());
    nn::Field4 cur_grad = dz;
    for (std::size_t l = r.layers.size(); l-- > 0;) {
        const nn::Field4& layer_input = l == 0 ? trace.input : trace.post[l - 1];
        nn::Conv3Backward back = nn::conv3d_backward(layer_input, r.layers[l], cur_grad);
        layer_grads[l] = std::move(back.param_grad);
        if (l > 0) {
            cur_grad = nn::relu_backward(trace.pre[l - 1], back.input_grad);
        } else {
            cur_grad = std::move(back.input_grad);
        }
    }
    grads.layers = std::move(layer_grads);

    // input gradients back to V and H: channels are
    // [V, H, V(1-H), H(1-V)] plus the residual logit path for V
    grads.coarse_grad = VoxelGrid(d);
    grads.hull_grad = VoxelGrid(d);
    for (std::size_t n = 0; n < n3; ++n) {
        const double v = trace.input.values[n];
        const double h = trace.input.values[n3 + n];
        const double d0 = cur_grad.values[n];
        const double d1 = cur_grad.values[n3 + n];
        const double d2 = cur_grad.values[2 * n3 + n];
        const double d3 = cur_grad.values[3 * n3 + n];
        double dv = d0 + d2 * (1.0 - h) - d3 * h;
        double dh = d1 - d2 * v + d3 * (1.0 - v);
        if (v > kResidualEps && v < 1.0 - kResidualEps) {
            dv += dresidual[n] / (v * (1.0 - v));
        }
        grads.coarse_grad.values[n] = dv;
        grads.hull_grad.values[n] = dh;
    }
    return grads;
}

TrainResult train_refiner(const RefinerConfig& config, const std::vector<TrainSample>& train,
                          const std::vector<TrainSample>& holdout, const Refiner* init) {
    if (train.empty()) {
        throw std::invalid_argument("train_refiner: empty dataset");
    }
    TrainResult result;
    result.model = init ? *init : make_refiner(config);
    result.model.config = config;
    Refiner& model = result.model;

    std::vector<double> params = flatten_params(model);
    nn::AdamState adam;
    adam.reset(params.size());
    Rng rng(config.seed ^ 0x7261696eULL);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const int batch = std::max(1, config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // seeded Fisher-Yates shuffle
        for (std::size_t n = order.size(); n > 1; --n) {
            std::swap(order[n - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1))]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            std::vector<double> grad_acc(params.size(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t n = start; n < stop; ++n) {
                const TrainSample& s = train[order[n]];
                RefinerTrace trace;
                refiner_forward(model, s.coarse, s.hull, &trace);
                const nn::ScalarLoss loss = nn::bce_loss(trace.output, s.target.values);
                batch_loss += loss.value;
                const RefinerGrads g = refiner_backward(model, trace, loss.grad);
                std::size_t off = 0;
                for (const auto& layer : g.layers) {
                    for (double w : layer.weights) {
                        grad_acc[off++] += w;
                    }
                    for (double b : layer.bias) {
                        grad_acc[off++] += b;
                    }
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad_acc) {
                g *= inv;
            }
            nn::adam_step(params, grad_acc, adam, config.lr);
            unflatten_params(model, params);
            epoch_loss += batch_loss * inv;
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = epoch_loss / static_cast<double>(batches);
        if (!holdout.empty()) {
            double iou_c = 0.0, iou_r = 0.0;
            for (const TrainSample& s : holdout) {
                iou_c += iou(s.coarse, s.target);
                iou_r += iou(refiner_forward(model, s.coarse, s.hull), s.target);
            }
            stats.holdout_iou_coarse = iou_c / static_cast<double>(holdout.size());
            stats.holdout_iou_refined = iou_r / static_cast<double>(holdout.size());
        }
        result.log.push_back(stats);
    }
    return result;
}

PoseFitResult pose_fit(const VoxelGrid& v, const SilhouetteMap& sil, const CameraIntrinsics& K,
                       const Pose& p0, int steps, double lr, double lambda) {
    if (is_binary(sil)) {
        throw std::invalid_argument(
            "pose_fit: silhouette is binary; blur it (radius >= 1 px) to get usable gradients");
    }
    if (!(p0.tz > 0.0)) {
        throw std::invalid_argument("pose_fit: initial tz must be positive");
    }

    const int dims = v.dims;
    // dL/dH is constant in p: -V + lambda (1 - V)
    HullGrid dh(dims);
    double v_sum = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) {
        dh.values[n] = lambda * (1.0 - v.values[n]) - v.values[n];
        v_sum += v.values[n];
    }

    hull::ForwardStats stats;
    const auto loss_at = [&](const Pose& p, bool* valid) -> double {
        if (!(p.tz > 0.05)) {
            *valid = false;
            return 0.0;
        }
        const HullGrid h = hull::forward(sil, p, K, dims, &stats);
        if (stats.behind_camera > 0) {
            *valid = false;
            return 0.0;
        }
        *valid = true;
        return v_sum + std::inner_product(h.values.begin(), h.values.end(), dh.values.begin(), 0.0);
    };

    PoseFitResult result;
    result.pose = p0;
    bool valid = false;
    double loss = loss_at(p0, &valid);
    if (!valid) {
        throw std::invalid_argument("pose_fit: initial pose puts voxels behind the camera");
    }
    result.best_loss = loss;
    result.loss_trace.push_back(loss);

    Pose p = p0;
    for (int step = 0; step < steps; ++step) {
        const Vec6 g = hull::backward_exact(dh, sil, p, K).pose_grad;
        double scale = lr;
        bool accepted = false;
        Pose cand;
        double cand_loss = 0.0;
        for (int tries = 0; tries < 24; ++tries) {
            cand = p;
            cand.theta1 -= scale * g[0];
            cand.theta2 -= scale * g[1];
            cand.theta3 -= scale * g[2];
            cand.tu -= scale * g[3];
            cand.tv -= scale * g[4];
            cand.tz -= scale * g[5];
            bool ok = false;
            cand_loss = loss_at(cand, &ok);
            if (ok && cand_loss < loss) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            break;  // no descent direction at this resolution
        }
        p = cand;
        loss = cand_loss;
        result.loss_trace.push_back(loss);
        ++result.steps_taken;
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.pose = p;
        }
    }
    return result;
}

}  // namespace psvh
