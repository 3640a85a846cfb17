#pragma once

#include <filesystem>

#include <json.hpp>

#include "psvh/datagen.hpp"
#include "psvh/geometry.hpp"

namespace psvh {

// JSON wire formats:
//   pose:        {"theta": [t1, t2, t3], "tu": .., "tv": .., "tz": ..}
//   intrinsics:  {"f": .., "u0": .., "v0": ..}

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json noise_spec_to_json(const NoiseSpec& n);
NoiseSpec noise_spec_from_json(const nlohmann::json& j);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace psvh
