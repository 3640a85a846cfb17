#include "psvh/serialize.hpp"

#include <fstream>

#include "psvh/errors.hpp"

namespace psvh {

nlohmann::json pose_to_json(const Pose& p) {
    return {{"theta", {p.theta1, p.theta2, p.theta3}},
            {"tu", p.tu},
            {"tv", p.tv},
            {"tz", p.tz}};
}

Pose pose_from_json(const nlohmann::json& j) {
    Pose p;
    const auto& theta = j.at("theta");
    if (!theta.is_array() || theta.size() != 3) {
        throw IoError("pose: \"theta\" must be an array of 3 angles");
    }
    p.theta1 = theta[0].get<double>();
    p.theta2 = theta[1].get<double>();
    p.theta3 = theta[2].get<double>();
    p.tu = j.at("tu").get<double>();
    p.tv = j.at("tv").get<double>();
    p.tz = j.at("tz").get<double>();
    return p;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
    return {{"f", k.f}, {"u0", k.u0}, {"v0", k.v0}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
    CameraIntrinsics k;
    k.f = j.at("f").get<double>();
    k.u0 = j.at("u0").get<double>();
    k.v0 = j.at("v0").get<double>();
    if (!(k.f > 0.0)) {
        throw IoError("intrinsics: focal length must be positive");
    }
    return k;
}

nlohmann::json noise_spec_to_json(const NoiseSpec& n) {
    return {{"corrupt",
             {{"drop_components", n.corrupt.drop_components},
              {"blur_radius", n.corrupt.blur_radius},
              {"noise_sigma", n.corrupt.noise_sigma}}},
            {"pose_sigma_deg", n.pose_sigma_deg},
            {"silhouette",
             {{"blur_radius", n.silhouette.blur_radius},
              {"dilate_px", n.silhouette.dilate_px},
              {"erode_px", n.silhouette.erode_px},
              {"flip_rate", n.silhouette.flip_rate}}}};
}

NoiseSpec noise_spec_from_json(const nlohmann::json& j) {
    NoiseSpec n;
    const auto& c = j.at("corrupt");
    n.corrupt.drop_components = c.at("drop_components").get<int>();
    n.corrupt.blur_radius = c.at("blur_radius").get<int>();
    n.corrupt.noise_sigma = c.at("noise_sigma").get<double>();
    n.pose_sigma_deg = j.at("pose_sigma_deg").get<double>();
    const auto& s = j.at("silhouette");
    n.silhouette.blur_radius = s.at("blur_radius").get<int>();
    n.silhouette.dilate_px = s.at("dilate_px").get<int>();
    n.silhouette.erode_px = s.at("erode_px").get<int>();
    n.silhouette.flip_rate = s.at("flip_rate").get<double>();
    return n;
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    os << j.dump(2) << '\n';
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace psvh
