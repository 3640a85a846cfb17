#include "psvh/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "psvh/datagen.hpp"
#include "psvh/errors.hpp"
#include "psvh/gradcheck.hpp"
#include "psvh/psvh_layer.hpp"
#include "psvh/refine.hpp"
#include "psvh/rng.hpp"
#include "psvh/serialize.hpp"

namespace psvh {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config plumbing: every flag doubles as a JSON config key; precedence is
// defaults < config file < flags

class OptionSet {
public:
    explicit OptionSet(CLI::App* app) : app_(app) {}

    template <class T>
    void add(const std::string& flag, T& var, const std::string& desc) {
        app_->add_option("--" + flag, var, desc);
        appliers_[flag] = [&var](const nlohmann::json& j) { var = j.get<T>(); };
    }

    void add_flag(const std::string& flag, bool& var, const std::string& desc) {
        app_->add_flag("--" + flag, var, desc);
        appliers_[flag] = [&var](const nlohmann::json& j) { var = j.get<bool>(); };
    }

    void apply(const nlohmann::json& section, const std::string& section_name) const {
        for (const auto& [key, value] : section.items()) {
            const auto it = appliers_.find(key);
            if (it == appliers_.end()) {
                throw ConfigError("config: unknown key \"" + key + "\" in section \"" +
                                  section_name + "\"");
            }
            try {
                it->second(value);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("config: bad value for \"" + section_name + "." + key +
                                  "\": " + e.what());
            }
        }
    }

private:
    CLI::App* app_;
    std::map<std::string, std::function<void(const nlohmann::json&)>> appliers_;
};

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw ConfigError(message);
    }
}

CameraIntrinsics load_camera_or_default(const std::string& path) {
    if (path.empty()) {
        return CameraIntrinsics{};
    }
    return intrinsics_from_json(load_json(path));
}

void append_csv_row(const fs::path& path, const std::string& header, const std::string& row) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream os(path, std::ios::app);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    if (fresh) {
        os << header << '\n';
    }
    os << row << '\n';
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

// Fraction of gt-occupied voxels whose hull value reaches 0.5.
double hull_containment(const VoxelGrid& v_gt, const HullGrid& h, double tau = 0.4) {
    std::size_t occupied = 0, contained = 0;
    for (std::size_t n = 0; n < v_gt.size(); ++n) {
        if (v_gt.values[n] >= tau) {
            ++occupied;
            contained += h.values[n] >= 0.5;
        }
    }
    return occupied == 0 ? 1.0 : static_cast<double>(contained) / static_cast<double>(occupied);
}

// ---------------------------------------------------------------------------
// per-command options

struct CommonOpts {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;
};

void add_common(OptionSet& set, CommonOpts& c) {
    set.add("seed", c.seed, "master RNG seed");
    set.add("threads", c.threads, "worker threads for sample generation");
    set.add("out", c.out, "output path");
}

struct GenOpts {
    CommonOpts common;
    int shapes = 20;
    int views = 4;
    int dims = 32;
    int image = 128;
    double focal = 150.0;
    int drop = 1;
    int cblur = 1;
    double cnoise = 0.08;
    double pose_sigma = 5.0;
    int sil_blur = 1;
    int sil_dilate = 1;
    int sil_erode = 0;
    double sil_flip = 0.0;
};

struct HullOpts {
    CommonOpts common;
    std::string sil, pose, camera;
    int dims = 32;
};

struct RenderOpts {
    CommonOpts common;
    std::string grid, pose, camera;
    int width = 128, height = 128;
    int blur = 0, dilate = 0, erode = 0;
    double flip = 0.0;
};

struct RefineOpts {
    CommonOpts common;
    std::string coarse, hull, model, gt, metrics, id;
    bool baseline_carve = false;
};

struct TrainOpts {
    CommonOpts common;
    std::string data;
    std::string phase = "both";  // gt | noisy | both | nohull
    int epochs = 8;
    int epochs_noisy = 4;
    double lr = 3e-3;
    int batch = 8;
    std::string channels = "4,8,8,8,1";
    int ksize = 3;
};

struct EvalOpts {
    CommonOpts common;
    std::string data, model, split = "test", buckets = "0,5,10,20";
    bool baseline_carve = false;
    double trans_sigma = 0.0;
};

struct GradcheckOpts {
    CommonOpts common;
    int dims = 8;
    int image = 64;
    int blur = 2;
    int seeds = 1;
    double step = 1e-7;
    double pose_tol = 1e-4;
    double sil_tol = 1e-6;
    bool binarize = false;
};

struct PosefitOpts {
    CommonOpts common;
    std::string grid, sil, camera, pose, gt_pose;
    double perturb_deg = 0.0;
    int steps = 150;
    double lr = 2e-6;
    double lambda = 0.1;
    int blur = 0;
    double expect_rot_below = 0.0;  // 0 disables the gate
};

// ---------------------------------------------------------------------------

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": expected a comma-separated integer list");
        }
    }
    require(!out.empty(), std::string(what) + ": empty list");
    return out;
}

int cmd_gen(const GenOpts& o) {
    require(!o.common.out.empty(), "gen: --out is required");
    require(o.shapes >= 1 && o.views >= 1, "gen: --shapes and --views must be >= 1");
    require(o.dims >= 2 && o.image >= 8, "gen: implausible --dims/--image");
    DatasetSpec spec;
    spec.n_shapes = o.shapes;
    spec.views_per_shape = o.views;
    spec.dims = o.dims;
    spec.image_width = o.image;
    spec.image_height = o.image;
    spec.intrinsics.f = o.focal;
    spec.intrinsics.u0 = o.image / 2.0;
    spec.intrinsics.v0 = o.image / 2.0;
    spec.seed = o.common.seed;
    spec.threads = std::max(1, o.common.threads);
    spec.noise.corrupt = {o.drop, o.cblur, o.cnoise};
    spec.noise.pose_sigma_deg = o.pose_sigma;
    spec.noise.silhouette = {o.sil_blur, o.sil_dilate, o.sil_erode, o.sil_flip};
    const fs::path manifest = write_dataset(o.common.out, spec);
    std::cout << manifest.string() << '\n';
    return 0;
}

int cmd_render(const RenderOpts& o) {
    require(!o.grid.empty() && !o.pose.empty(), "render: --grid and --pose are required");
    require(!o.common.out.empty(), "render: --out is required");
    const VoxelGrid grid = load_grid(o.grid);
    const Pose pose = pose_from_json(load_json(o.pose));
    const CameraIntrinsics K = load_camera_or_default(o.camera);
    SilhouetteMap sil = render_silhouette(grid, pose, K, o.width, o.height);
    const DegradeParams degrade{o.blur, o.dilate, o.erode, o.flip};
    if (o.blur || o.dilate || o.erode || o.flip > 0.0) {
        sil = degrade_silhouette(sil, o.common.seed, degrade);
    }
    save_pgm(o.common.out, sil);
    return 0;
}

int cmd_hull(const HullOpts& o) {
    require(!o.sil.empty() && !o.pose.empty(), "hull: --sil and --pose are required");
    require(!o.common.out.empty(), "hull: --out is required");
    const SilhouetteMap sil = load_pgm(o.sil);
    const Pose pose = pose_from_json(load_json(o.pose));
    const CameraIntrinsics K = load_camera_or_default(o.camera);
    hull::ForwardStats stats;
    const HullGrid h = hull::forward(sil, pose, K, o.dims, &stats);
    const double total = static_cast<double>(h.size());
    std::cout << "off_image_fraction "
              << format_double(static_cast<double>(stats.off_image + stats.behind_camera) / total)
              << '\n';
    if (*std::max_element(h.values.begin(), h.values.end()) <= 0.0) {
        std::cerr << "warning: hull is empty (silhouette all zero?)\n";
    }
    save_grid(o.common.out, h);
    return 0;
}

int cmd_refine(const RefineOpts& o) {
    require(!o.coarse.empty() && !o.hull.empty(), "refine: --coarse and --hull are required");
    require(!o.common.out.empty(), "refine: --out is required");
    require(o.baseline_carve != !o.model.empty(),
            "refine: pass exactly one of --model or --baseline-carve");
    const VoxelGrid coarse = load_grid(o.coarse);
    const HullGrid h = load_grid(o.hull);
    VoxelGrid refined;
    if (o.baseline_carve) {
        refined = carve_refine(coarse, h);
    } else {
        const Refiner model = load_refiner(o.model);
        refined = refiner_forward(model, coarse, h);
    }
    save_grid(o.common.out, refined);

    if (!o.gt.empty()) {
        const VoxelGrid gt = load_grid(o.gt);
        const double iou_coarse = iou(coarse, gt);
        const double iou_refined = iou(refined, gt);
        const std::string id = o.id.empty() ? fs::path(o.coarse).stem().string() : o.id;
        const fs::path metrics = o.metrics.empty()
                                     ? fs::path(o.common.out).parent_path() / "refine_metrics.csv"
                                     : fs::path(o.metrics);
        std::ostringstream row;
        row << id << ',' << format_double(iou_coarse) << ',' << format_double(iou_refined) << ','
            << format_double(iou_refined - iou_coarse);
        append_csv_row(metrics, "id,iou_coarse,iou_refined,iou_gain", row.str());
        std::cout << row.str() << '\n';
    }
    return 0;
}

// Builds the per-phase training tensors; hulls come from ground-truth
// silhouette and pose, from their degraded counterparts, or are the
// uninformative constant 1.
std::vector<TrainSample> build_train_samples(const Dataset& ds, const std::string& split,
                                             const std::string& phase) {
    std::vector<TrainSample> out;
    for (const Sample& s : ds.samples) {
        if (s.split != split) {
            continue;
        }
        TrainSample t;
        t.coarse = s.v_coarse;
        t.target = s.v_gt;
        if (phase == "nohull") {
            t.hull = HullGrid(ds.spec.dims, 1.0);
        } else if (phase == "noisy") {
            const std::uint64_t seed =
                Rng::derive(ds.spec.seed, static_cast<std::uint64_t>(s.shape_id),
                            0xD0 + static_cast<std::uint64_t>(s.view_id))
                    .next_u64();
            const Pose noisy = perturb_pose(s.pose, seed, ds.spec.noise.pose_sigma_deg, 0.0);
            const SilhouetteMap sil =
                degrade_silhouette(s.silhouette, seed ^ 0x51, ds.spec.noise.silhouette);
            t.hull = hull::forward(sil, noisy, ds.spec.intrinsics, ds.spec.dims);
        } else {  // gt
            t.hull = hull::forward(s.silhouette, s.pose, ds.spec.intrinsics, ds.spec.dims);
        }
        out.push_back(std::move(t));
    }
    return out;
}

void append_train_log(const fs::path& path, const std::string& phase,
                      const std::vector<EpochStats>& log) {
    for (const EpochStats& e : log) {
        std::ostringstream row;
        row << phase << ',' << e.epoch << ',' << format_double(e.loss) << ','
            << format_double(e.holdout_iou_coarse) << ',' << format_double(e.holdout_iou_refined);
        append_csv_row(path, "phase,epoch,loss,holdout_iou_coarse,holdout_iou_refined", row.str());
    }
}

int cmd_train(const TrainOpts& o) {
    require(!o.data.empty(), "train: --data is required");
    require(!o.common.out.empty(), "train: --out is required");
    require(o.phase == "gt" || o.phase == "noisy" || o.phase == "both" || o.phase == "nohull",
            "train: --phase must be gt, noisy, both or nohull");
    const Dataset ds = load_dataset(o.data);

    RefinerConfig config;
    config.channels = parse_int_list(o.channels, "train: --channels");
    config.ksize = o.ksize;
    config.lr = o.lr;
    config.batch_size = o.batch;
    config.seed = o.common.seed;

    const fs::path log_path = fs::path(o.common.out).string() + ".log.csv";
    if (fs::exists(log_path)) {
        fs::remove(log_path);
    }

    const std::string first_phase = o.phase == "both" ? "gt" : o.phase;
    config.epochs = o.epochs;
    auto train_set = build_train_samples(ds, "train", first_phase);
    auto holdout_set = build_train_samples(ds, "test", first_phase);
    require(!train_set.empty(), "train: dataset has no training split");
    TrainResult result = train_refiner(config, train_set, holdout_set);
    append_train_log(log_path, first_phase, result.log);

    if (o.phase == "both") {
        config.epochs = o.epochs_noisy;
        train_set = build_train_samples(ds, "train", "noisy");
        holdout_set = build_train_samples(ds, "test", "noisy");
        TrainResult adapted = train_refiner(config, train_set, holdout_set, &result.model);
        append_train_log(log_path, "noisy", adapted.log);
        result.model = std::move(adapted.model);
    }

    save_refiner(o.common.out, result.model);
    std::cout << o.common.out << '\n' << log_path.string() << '\n';
    return 0;
}

int cmd_eval(const EvalOpts& o) {
    require(!o.data.empty(), "eval: --data is required");
    require(!o.common.out.empty(), "eval: --out is required");
    require(o.baseline_carve != !o.model.empty(),
            "eval: pass exactly one of --model or --baseline-carve");
    require(o.split == "test" || o.split == "train" || o.split == "all",
            "eval: --split must be test, train or all");
    const Dataset ds = load_dataset(o.data);
    const std::vector<int> buckets = parse_int_list(o.buckets, "eval: --buckets");

    Refiner model;
    if (!o.baseline_carve) {
        model = load_refiner(o.model);
    }

    const std::string header =
        "id,kind,split,bucket_deg,iou_coarse,iou_refined,iou_gain,rotation_error_deg,"
        "translation_error_pct,silhouette_iou,containment";
    const fs::path out_path = o.common.out;
    if (fs::exists(out_path)) {
        fs::remove(out_path);
    }

    struct Agg {
        double iou_coarse = 0, iou_refined = 0, gain = 0, rot = 0, trans = 0, sil = 0, cont = 0;
        int n = 0;
    };
    std::map<int, Agg> agg;

    for (std::size_t bi = 0; bi < buckets.size(); ++bi) {
        const int bucket = buckets[bi];
        for (const Sample& s : ds.samples) {
            if (o.split != "all" && s.split != o.split) {
                continue;
            }
            const std::uint64_t seed =
                Rng::derive(ds.spec.seed ^ 0xE7A1, static_cast<std::uint64_t>(s.shape_id),
                            (static_cast<std::uint64_t>(s.view_id) << 8) | bi)
                    .next_u64();
            const Pose est_pose = perturb_pose(s.pose, seed, bucket, o.trans_sigma);
            const SilhouetteMap est_sil =
                degrade_silhouette(s.silhouette, seed ^ 0x51C, ds.spec.noise.silhouette);
            const HullGrid h = hull::forward(est_sil, est_pose, ds.spec.intrinsics, ds.spec.dims);
            const VoxelGrid refined =
                o.baseline_carve ? carve_refine(s.v_coarse, h) : refiner_forward(model, s.v_coarse, h);

            const double iou_coarse = iou(s.v_coarse, s.v_gt);
            const double iou_refined = iou(refined, s.v_gt);
            const CameraIntrinsics& K = ds.spec.intrinsics;
            const double rot = rotation_error_deg(
                euler_to_rotation(s.pose.theta1, s.pose.theta2, s.pose.theta3),
                euler_to_rotation(est_pose.theta1, est_pose.theta2, est_pose.theta3));
            const double trans = translation_error_pct(pose_to_transform(est_pose, K).t,
                                                       pose_to_transform(s.pose, K).t);
            const double sil_iou = silhouette_iou(est_sil, s.silhouette);
            const double cont = hull_containment(s.v_gt, h);

            std::ostringstream row;
            row << s.id << ',' << to_string(s.kind) << ',' << s.split << ',' << bucket << ','
                << format_double(iou_coarse) << ',' << format_double(iou_refined) << ','
                << format_double(iou_refined - iou_coarse) << ',' << format_double(rot) << ','
                << format_double(trans) << ',' << format_double(sil_iou) << ','
                << format_double(cont);
            append_csv_row(out_path, header, row.str());

            Agg& a = agg[bucket];
            a.iou_coarse += iou_coarse;
            a.iou_refined += iou_refined;
            a.gain += iou_refined - iou_coarse;
            a.rot += rot;
            a.trans += trans;
            a.sil += sil_iou;
            a.cont += cont;
            ++a.n;
        }
    }

    for (const int bucket : buckets) {
        const Agg& a = agg[bucket];
        if (a.n == 0) {
            continue;
        }
        const double inv = 1.0 / a.n;
        std::ostringstream row;
        row << "aggregate,all," << o.split << ',' << bucket << ','
            << format_double(a.iou_coarse * inv) << ',' << format_double(a.iou_refined * inv)
            << ',' << format_double(a.gain * inv) << ',' << format_double(a.rot * inv) << ','
            << format_double(a.trans * inv) << ',' << format_double(a.sil * inv) << ','
            << format_double(a.cont * inv);
        append_csv_row(out_path, header, row.str());
    }

    // compact per-bucket gain table alongside the main CSV
    const fs::path buckets_path = out_path.string() + ".buckets.csv";
    if (fs::exists(buckets_path)) {
        fs::remove(buckets_path);
    }
    for (const int bucket : buckets) {
        const Agg& a = agg[bucket];
        if (a.n == 0) {
            continue;
        }
        std::ostringstream row;
        row << bucket << ',' << a.n << ',' << format_double(a.iou_coarse / a.n) << ','
            << format_double(a.iou_refined / a.n) << ',' << format_double(a.gain / a.n);
        append_csv_row(buckets_path, "bucket_deg,n,mean_iou_coarse,mean_iou_refined,mean_gain",
                       row.str());
    }
    std::cout << out_path.string() << '\n';
    return 0;
}

int cmd_gradcheck(const GradcheckOpts& o) {
    require(o.seeds >= 1, "gradcheck: --seeds must be >= 1");
    double worst_pose = 0.0, worst_sil = 0.0;
    bool all_ok = true;
    std::ostringstream csv;
    for (int n = 0; n < o.seeds; ++n) {
        GradCheckCase c;
        c.dims = o.dims;
        c.image_size = o.image;
        c.blur_radius = o.blur;
        c.binarize_silhouette = o.binarize;
        c.seed = o.common.seed + static_cast<std::uint64_t>(n) + 1;
        c.fd_step = o.step;
        c.pose_tol = o.pose_tol;
        c.silhouette_tol = o.sil_tol;
        const GradCheckReport report = run_gradcheck(c);
        write_gradcheck_csv(csv, report);
        worst_pose = std::max(worst_pose, report.max_rel_pose);
        worst_sil = std::max(worst_sil, report.max_rel_silhouette);
        all_ok = all_ok && report.ok();
        if (!report.pose_eligible) {
            std::cout << "seed " << c.seed
                      << ": silhouette is binary, pose path skipped (ineligible)\n";
        }
    }
    if (o.common.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream os(o.common.out);
        if (!os) {
            throw IoError("cannot write " + o.common.out);
        }
        os << csv.str();
    }
    std::cout << "max_rel_pose " << format_double(worst_pose) << "\nmax_rel_silhouette "
              << format_double(worst_sil) << '\n';
    if (!all_ok) {
        throw ToleranceError("gradcheck exceeded tolerance");
    }
    return 0;
}

int cmd_posefit(const PosefitOpts& o) {
    require(!o.grid.empty() && !o.sil.empty(), "posefit: --grid and --sil are required");
    require(!o.pose.empty() || !o.gt_pose.empty(),
            "posefit: pass --pose, or --gt-pose with --perturb-deg");
    const VoxelGrid grid = load_grid(o.grid);
    SilhouetteMap sil = load_pgm(o.sil);
    if (o.blur > 0) {
        sil = box_blur(sil, o.blur);
    }
    const CameraIntrinsics K = load_camera_or_default(o.camera);

    Pose gt{};
    bool have_gt = false;
    if (!o.gt_pose.empty()) {
        gt = pose_from_json(load_json(o.gt_pose));
        have_gt = true;
    }
    Pose p0;
    if (!o.pose.empty()) {
        p0 = pose_from_json(load_json(o.pose));
    } else {
        p0 = perturb_pose(gt, o.common.seed, o.perturb_deg, 0.0);
    }

    const PoseFitResult fit = pose_fit(grid, sil, K, p0, o.steps, o.lr, o.lambda);
    std::cout << "steps " << fit.steps_taken << "\nloss_initial "
              << format_double(fit.loss_trace.front()) << "\nloss_final "
              << format_double(fit.best_loss) << '\n';
    if (have_gt) {
        const auto rot = [](const Pose& p) {
            return euler_to_rotation(p.theta1, p.theta2, p.theta3);
        };
        const double before = rotation_error_deg(rot(gt), rot(p0));
        const double after = rotation_error_deg(rot(gt), rot(fit.pose));
        std::cout << "rotation_error_initial_deg " << format_double(before)
                  << "\nrotation_error_final_deg " << format_double(after) << '\n';
        if (o.expect_rot_below > 0.0 && after >= o.expect_rot_below) {
            throw ToleranceError("posefit: final rotation error " + format_double(after) +
                                 " deg is not below " + format_double(o.expect_rot_below));
        }
    }
    if (!o.common.out.empty()) {
        save_json(o.common.out, pose_to_json(fit.pose));
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args) {
    // peel --config before CLI11 sees the args
    std::vector<std::string> args;
    std::string config_path;
    for (std::size_t n = 0; n < raw_args.size(); ++n) {
        if (raw_args[n] == "--config") {
            if (n + 1 >= raw_args.size()) {
                std::cerr << "error: --config needs a path\n";
                return 2;
            }
            config_path = raw_args[++n];
        } else {
            args.push_back(raw_args[n]);
        }
    }

    CLI::App app{"differentiable single-view visual hull toolkit"};
    app.require_subcommand(0, 1);

    GenOpts gen;
    RenderOpts render;
    HullOpts hull_o;
    RefineOpts refine;
    TrainOpts train;
    EvalOpts eval;
    GradcheckOpts gradcheck;
    PosefitOpts posefit;

    std::map<std::string, OptionSet> sets;
    std::vector<CommonOpts*> commons;

    auto make = [&](const char* name, const char* desc, CommonOpts& common) -> OptionSet& {
        CLI::App* sub = app.add_subcommand(name, desc);
        auto [it, unused] = sets.emplace(name, OptionSet(sub));
        add_common(it->second, common);
        commons.push_back(&common);
        return it->second;
    };

    {
        OptionSet& s = make("gen", "generate a synthetic dataset", gen.common);
        s.add("shapes", gen.shapes, "number of shapes");
        s.add("views", gen.views, "views per shape");
        s.add("dims", gen.dims, "voxel grid resolution");
        s.add("image", gen.image, "silhouette image size");
        s.add("focal", gen.focal, "focal length [px]");
        s.add("drop", gen.drop, "coarse corruption: components to drop");
        s.add("cblur", gen.cblur, "coarse corruption: 3D blur radius");
        s.add("cnoise", gen.cnoise, "coarse corruption: noise sigma");
        s.add("pose-sigma", gen.pose_sigma, "recorded pose noise sigma [deg]");
        s.add("sil-blur", gen.sil_blur, "recorded silhouette blur radius");
        s.add("sil-dilate", gen.sil_dilate, "recorded silhouette dilation [px]");
        s.add("sil-erode", gen.sil_erode, "recorded silhouette erosion [px]");
        s.add("sil-flip", gen.sil_flip, "recorded silhouette flip rate");
    }
    {
        OptionSet& s = make("render", "render a silhouette from a grid and pose", render.common);
        s.add("grid", render.grid, "voxel grid file");
        s.add("pose", render.pose, "pose JSON file");
        s.add("camera", render.camera, "intrinsics JSON file");
        s.add("width", render.width, "image width");
        s.add("height", render.height, "image height");
        s.add("blur", render.blur, "degrade: box blur radius");
        s.add("dilate", render.dilate, "degrade: dilation [px]");
        s.add("erode", render.erode, "degrade: erosion [px]");
        s.add("flip", render.flip, "degrade: pixel flip rate");
    }
    {
        OptionSet& s = make("hull", "construct a visual hull grid", hull_o.common);
        s.add("sil", hull_o.sil, "silhouette PGM file");
        s.add("pose", hull_o.pose, "pose JSON file");
        s.add("camera", hull_o.camera, "intrinsics JSON file");
        s.add("dims", hull_o.dims, "hull grid resolution");
    }
    {
        OptionSet& s = make("refine", "refine a coarse grid with a hull", refine.common);
        s.add("coarse", refine.coarse, "coarse voxel grid file");
        s.add("hull", refine.hull, "hull grid file");
        s.add("model", refine.model, "trained refiner parameters");
        s.add_flag("baseline-carve", refine.baseline_carve, "use the carving baseline");
        s.add("gt", refine.gt, "ground-truth grid for the metrics row");
        s.add("metrics", refine.metrics, "metrics CSV to append to");
        s.add("id", refine.id, "sample id for the metrics row");
    }
    {
        OptionSet& s = make("train", "train the refinement network", train.common);
        s.add("data", train.data, "dataset directory");
        s.add("phase", train.phase, "gt | noisy | both | nohull");
        s.add("epochs", train.epochs, "epochs for the first phase");
        s.add("epochs-noisy", train.epochs_noisy, "epochs for the noisy phase");
        s.add("lr", train.lr, "Adam learning rate");
        s.add("batch", train.batch, "mini-batch size");
        s.add("channels", train.channels, "layer channel plan");
        s.add("ksize", train.ksize, "conv kernel size");
    }
    {
        OptionSet& s = make("eval", "evaluate refinement over noise buckets", eval.common);
        s.add("data", eval.data, "dataset directory");
        s.add("model", eval.model, "trained refiner parameters");
        s.add_flag("baseline-carve", eval.baseline_carve, "use the carving baseline");
        s.add("split", eval.split, "test | train | all");
        s.add("buckets", eval.buckets, "rotation-noise buckets [deg]");
        s.add("trans-sigma", eval.trans_sigma, "translation noise sigma [px]");
    }
    {
        OptionSet& s = make("gradcheck", "finite-difference gradient check", gradcheck.common);
        s.add("dims", gradcheck.dims, "hull grid resolution");
        s.add("image", gradcheck.image, "silhouette size");
        s.add("blur", gradcheck.blur, "silhouette blur radius");
        s.add("seeds", gradcheck.seeds, "number of seeded cases");
        s.add("step", gradcheck.step, "finite-difference step");
        s.add("pose-tol", gradcheck.pose_tol, "pose path tolerance");
        s.add("sil-tol", gradcheck.sil_tol, "silhouette path tolerance");
        s.add_flag("binarize", gradcheck.binarize, "binarize the silhouette (ineligible demo)");
    }
    {
        OptionSet& s = make("posefit", "fit a pose through the hull layer", posefit.common);
        s.add("grid", posefit.grid, "occupancy grid file");
        s.add("sil", posefit.sil, "silhouette PGM file");
        s.add("camera", posefit.camera, "intrinsics JSON file");
        s.add("pose", posefit.pose, "initial pose JSON file");
        s.add("gt-pose", posefit.gt_pose, "ground-truth pose JSON file");
        s.add("perturb-deg", posefit.perturb_deg, "rotation perturbation of the GT pose [deg]");
        s.add("steps", posefit.steps, "gradient steps");
        s.add("lr", posefit.lr, "step size");
        s.add("lambda", posefit.lambda, "weight of the outside-shape hull penalty");
        s.add("blur", posefit.blur, "blur the silhouette before fitting");
        s.add("expect-rot-below", posefit.expect_rot_below,
              "exit 4 unless the final rotation error is below this [deg]");
    }

    try {
        if (!config_path.empty()) {
            const nlohmann::json config = load_json(config_path);
            if (!config.is_object()) {
                throw ConfigError("config: top level must be an object");
            }
            for (const auto& [section, body] : config.items()) {
                if (section == "common") {
                    if (!body.is_object()) {
                        throw ConfigError("config: \"common\" must be an object");
                    }
                    for (const auto& [key, value] : body.items()) {
                        for (CommonOpts* c : commons) {
                            if (key == "seed") {
                                c->seed = value.get<std::uint64_t>();
                            } else if (key == "threads") {
                                c->threads = value.get<int>();
                            } else {
                                throw ConfigError("config: unknown key \"" + key +
                                                  "\" in section \"common\"");
                            }
                        }
                    }
                    continue;
                }
                const auto it = sets.find(section);
                if (it == sets.end()) {
                    throw ConfigError("config: unknown section \"" + section + "\"");
                }
                if (!body.is_object()) {
                    throw ConfigError("config: section \"" + section + "\" must be an object");
                }
                it->second.apply(body, section);
            }
        }

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);

        if (app.get_subcommands().empty()) {
            std::cout << app.help();
            return 0;
        }
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "gen") return cmd_gen(gen);
        if (name == "render") return cmd_render(render);
        if (name == "hull") return cmd_hull(hull_o);
        if (name == "refine") return cmd_refine(refine);
        if (name == "train") return cmd_train(train);
        if (name == "eval") return cmd_eval(eval);
        if (name == "gradcheck") return cmd_gradcheck(gradcheck);
        if (name == "posefit") return cmd_posefit(posefit);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\nrun with --help for usage\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ToleranceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace psvh
