#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lfr/config.hpp"
#include "lfr/eval.hpp"

namespace lfr::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIoError = 2,
  kFormatError = 3,
  kConfigError = 4,
  kInsufficientFeatures = 5,
};

/// Maps an exception to its exit code and writes a one-line diagnostic to stderr.
int report_exception(std::exception_ptr error);

/// Config file (optional) followed by per-key overrides, in that order.
struct ConfigSource {
  std::optional<std::filesystem::path> file;
  std::map<std::string, std::string> overrides;

  PipelineConfig resolve() const;
};

struct RenderArgs {
  std::string scene;  // path to a scene JSON file or a preset name
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct DetectArgs {
  std::filesystem::path lf_dir;
  ConfigSource config;
  std::filesystem::path out_keypoints;
};

struct ClassifyArgs {
  std::filesystem::path lf_dir;
  std::optional<std::filesystem::path> keypoints;
  ConfigSource config;
  std::filesystem::path out_json;
  std::optional<std::filesystem::path> out_png;
  std::optional<std::filesystem::path> out_curves;
  unsigned threads = 0;
};

struct EvalArgs {
  std::filesystem::path lf_dir;
  std::filesystem::path mask_png;
  std::optional<std::filesystem::path> keypoints;
  ConfigSource config;
  std::filesystem::path out_csv;
  double exclude_center = 0.0;  // exclusion disc radius as a fraction of mask radius
  unsigned threads = 0;
};

struct SweepArgs {
  std::filesystem::path lf_dir;
  std::filesystem::path mask_png;
  std::optional<std::filesystem::path> keypoints;
  std::optional<std::filesystem::path> grid;  // JSON {"planar": [...], "slope": [...], "xu": [...]}
  ConfigSource config;
  std::filesystem::path out_csv;
  double exclude_center = 0.0;
  unsigned threads = 0;
};

enum class ExportMode { filtered, unfiltered };

struct ExportArgs {
  std::filesystem::path classify_json;
  ExportMode mode = ExportMode::filtered;
  std::filesystem::path out_file;
};

// Each command returns an exit code and never throws.
int cmd_render(const RenderArgs& args);
int cmd_detect(const DetectArgs& args);
int cmd_classify(const ClassifyArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_sweep(const SweepArgs& args);
int cmd_export_features(const ExportArgs& args);

/// Classification document written by `classify`.
nlohmann::json classification_json(const std::vector<FeatureLabel>& labels, const PipelineConfig& cfg,
                                    const std::string& source);

ThresholdGrid load_grid(const std::filesystem::path& path);

}  // namespace lfr::cli
