#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lfr/curves.hpp"
#include "lfr/fit.hpp"
#include "lfr/keypoint.hpp"

namespace lfr {

/// Every tunable of the pipeline. Serialized as one flat JSON object whose keys
/// are listed by config_keys(); `k_template` drives both the detector border
/// margin and the template size.
struct PipelineConfig {
  DetectorConfig detector;
  CurveConfig curves;
  Thresholds thresholds;
};

const std::vector<std::string>& config_keys();

/// Sets one key from its textual value. Throws ConfigError for unknown keys or
/// unparsable/out-of-range values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

/// Missing file is an IoError; bad content is a ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace lfr
