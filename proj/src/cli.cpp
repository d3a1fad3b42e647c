#include "lfr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"
#include "lfr/lightfield.hpp"
#include "lfr/pipeline.hpp"
#include "lfr/png_io.hpp"
#include "lfr/synth.hpp"

namespace lfr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int report_exception(std::exception_ptr error) {
  try {
    std::rethrow_exception(error);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFormatError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InsufficientFeaturesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInsufficientFeatures;
  } catch (const std::out_of_range& e) {
    // Input coordinates outside the data they refer to.
    std::cerr << "error: " << e.what() << "\n";
    return kFormatError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (...) {
    std::cerr << "error: unknown failure\n";
    return kFailure;
  }
}

PipelineConfig ConfigSource::resolve() const {
  PipelineConfig cfg = file ? load_config(*file) : PipelineConfig{};
  for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
  return cfg;
}

namespace {

template <typename F>
int guarded(F&& body) {
  try {
    body();
    return kOk;
  } catch (...) {
    return report_exception(std::current_exception());
  }
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw FormatError(std::string("feature is missing numeric '") + key + "'");
  return it->get<double>();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Keypoint> keypoints_for(const LightField& lf, const std::optional<fs::path>& file,
                                    const PipelineConfig& cfg) {
  std::vector<Keypoint> kps = file ? load_keypoints(*file, lf.n_u(), lf.n_v()) : detect_central_keypoints(lf, cfg);
  if (kps.empty()) throw InsufficientFeaturesError("no keypoints in the central view");
  return kps;
}

Image load_mask(const fs::path& path, const LightField& lf) {
  Image mask = read_gray_image(path);
  if (mask.width != lf.n_u() || mask.height != lf.n_v()) {
    throw FormatError("mask '" + path.string() + "' does not match the " + std::to_string(lf.n_u()) + "x" +
                      std::to_string(lf.n_v()) + " views");
  }
  return mask;
}

std::optional<Image> exclusion_for(const Image& mask, double fraction) {
  if (fraction <= 0.0) return std::nullopt;
  return central_exclusion_disc(mask, fraction);
}

SceneSpec scene_for(const std::string& scene) {
  if (fs::is_regular_file(scene)) return scene_from_json(read_json(scene));
  try {
    return preset_scene(scene);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " (and no such scene file)");
  }
}

json curve_json(const FeatureCurve& c) {
  json samples = json::array();
  for (const CurveSample& s : c.samples) samples.push_back({s.view_offset, s.pixel_pos, s.corr_score});
  return {{"orientation", to_string(c.orientation)},
          {"valid", c.valid},
          {"reject_reason", c.reject_reason},
          {"samples", samples}};
}

}  // namespace

json classification_json(const std::vector<FeatureLabel>& labels, const PipelineConfig& cfg,
                         const std::string& source) {
  json features = json::array();
  int counts[3] = {0, 0, 0};
  for (const FeatureLabel& l : labels) {
    ++counts[static_cast<int>(l.verdict)];
    features.push_back({{"u0", l.keypoint.u0},
                        {"v0", l.keypoint.v0},
                        {"scale", l.keypoint.scale},
                        {"score", l.keypoint.score},
                        {"verdict", to_string(l.verdict)},
                        {"reasons", l.reason_names()},
                        {"n_samples", l.n_samples},
                        {"e1", number_or_null(l.fit.e1)},
                        {"e2", number_or_null(l.fit.e2)},
                        {"e_min_xu", number_or_null(l.baseline_fit.e_min)},
                        {"w_su", number_or_null(l.slopes.w_su)},
                        {"w_tv", number_or_null(l.slopes.w_tv)},
                        {"c", number_or_null(l.slopes.c)}});
  }
  json summary = {{"lambertian", counts[0]}, {"refracted", counts[1]}, {"indeterminate", counts[2]}};
  if (!labels.empty()) summary["refraction_ratio"] = refraction_ratio(labels).r;
  return {{"source", source}, {"config", config_to_json(cfg)}, {"summary", summary}, {"features", features}};
}

ThresholdGrid load_grid(const fs::path& path) {
  const json j = read_json(path);
  ThresholdGrid grid;
  auto list = [&](const char* key, std::vector<double>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) throw ConfigError(std::string("grid '") + key + "' must be an array");
    for (const json& v : j[key]) {
      if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() < 0.0) {
        throw ConfigError(std::string("grid '") + key + "' holds a non-numeric or negative value");
      }
      out.push_back(v.get<double>());
    }
  };
  list("planar", grid.planar);
  list("slope", grid.slope);
  list("xu", grid.xu);
  if ((grid.planar.empty() || grid.slope.empty()) && grid.xu.empty()) {
    throw ConfigError("grid '" + path.string() + "' has no usable threshold pairs");
  }
  return grid;
}

int cmd_render(const RenderArgs& args) {
  return guarded([&] {
    const SceneSpec spec = scene_for(args.scene);
    const RenderResult r = render_lightfield(spec, args.seed, args.threads);
    save_lightfield(r.lf, args.out_dir);
    write_png_gray8(r.truth.refr_mask, args.out_dir / "ground_truth.png");

    float max_depth = 0.0f;
    for (float z : r.truth.depth_map.pixels) max_depth = std::max(max_depth, z);
    const double scale = std::max(1.0 / 16.0, static_cast<double>(max_depth) / 65535.0);
    std::vector<std::uint16_t> counts;
    counts.reserve(r.truth.depth_map.pixels.size());
    for (float z : r.truth.depth_map.pixels) counts.push_back(static_cast<std::uint16_t>(std::lround(z / scale)));
    char comment[64];
    std::snprintf(comment, sizeof comment, "depth_scale %.17g", scale);
    write_pgm16(counts, r.truth.depth_map.width, r.truth.depth_map.height, args.out_dir / "depth.pgm", comment);

    json scene = scene_to_json(spec);
    scene["seed"] = args.seed;
    write_text(args.out_dir / "scene.json", scene.dump(2) + "\n");
  });
}

int cmd_detect(const DetectArgs& args) {
  return guarded([&] {
    const PipelineConfig cfg = args.config.resolve();
    const LightField lf = load_lightfield(args.lf_dir);
    const std::vector<Keypoint> kps = detect_central_keypoints(lf, cfg);
    if (kps.empty()) throw InsufficientFeaturesError("no keypoints in the central view");
    save_keypoints(kps, args.out_keypoints);
  });
}

int cmd_classify(const ClassifyArgs& args) {
  return guarded([&] {
    const PipelineConfig cfg = args.config.resolve();
    const LightField lf = load_lightfield(args.lf_dir);
    const std::vector<Keypoint> kps = keypoints_for(lf, args.keypoints, cfg);
    std::vector<CurvePair> curves;
    const std::vector<FeatureLabel> labels =
        analyze_features(lf, kps, cfg, args.threads, args.out_curves ? &curves : nullptr);
    write_text(args.out_json, classification_json(labels, cfg, lf.meta().source).dump(2) + "\n");
    if (args.out_png) write_png_rgb8(annotate_view(central_view(lf), labels), *args.out_png);
    if (args.out_curves) {
      json doc = json::array();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        doc.push_back({{"u0", labels[i].keypoint.u0},
                       {"v0", labels[i].keypoint.v0},
                       {"horizontal", curve_json(curves[i].horizontal)},
                       {"vertical", curve_json(curves[i].vertical)}});
      }
      write_text(*args.out_curves, doc.dump(1) + "\n");
    }
  });
}

int cmd_eval(const EvalArgs& args) {
  return guarded([&] {
    const PipelineConfig cfg = args.config.resolve();
    const LightField lf = load_lightfield(args.lf_dir);
    const Image mask = load_mask(args.mask_png, lf);
    const std::vector<Keypoint> kps = keypoints_for(lf, args.keypoints, cfg);
    const std::vector<FeatureLabel> labels = analyze_features(lf, kps, cfg, args.threads);
    const std::optional<Image> exclusion = exclusion_for(mask, args.exclude_center);
    const Image* ex = exclusion ? &*exclusion : nullptr;
    const std::vector<EvalResult> results = {evaluate(labels, mask, Method::proposed, cfg.thresholds, ex),
                                             evaluate(labels, mask, Method::xu_baseline, cfg.thresholds, ex)};
    write_text(args.out_csv, results_csv(results));
  });
}

int cmd_sweep(const SweepArgs& args) {
  return guarded([&] {
    const PipelineConfig cfg = args.config.resolve();
    const ThresholdGrid grid = args.grid ? load_grid(*args.grid) : default_threshold_grid();
    const LightField lf = load_lightfield(args.lf_dir);
    const Image mask = load_mask(args.mask_png, lf);
    const std::vector<Keypoint> kps = keypoints_for(lf, args.keypoints, cfg);
    const std::optional<Image> exclusion = exclusion_for(mask, args.exclude_center);
    const std::vector<EvalResult> results =
        sweep_thresholds(lf, kps, mask, grid, cfg, args.threads, exclusion ? &*exclusion : nullptr);
    write_text(args.out_csv, results_csv(results));
  });
}

int cmd_export_features(const ExportArgs& args) {
  return guarded([&] {
    const json doc = read_json(args.classify_json);
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
      throw FormatError("'" + args.classify_json.string() + "' is not a classification document");
    }
    std::vector<Keypoint> kept;
    for (const json& f : doc["features"]) {
      if (!f.is_object() || !f.contains("verdict") || !f["verdict"].is_string()) {
        throw FormatError("feature without a verdict");
      }
      const std::string verdict = f["verdict"].get<std::string>();
      if (verdict != "lambertian" && verdict != "refracted" && verdict != "indeterminate") {
        throw FormatError("unknown verdict '" + verdict + "'");
      }
      if (args.mode == ExportMode::filtered && verdict != "lambertian") continue;
      Keypoint kp;
      kp.u0 = number_from(f, "u0");
      kp.v0 = number_from(f, "v0");
      kp.scale = number_from(f, "scale");
      kp.score = number_from(f, "score");
      kept.push_back(kp);
    }
    save_keypoints(kept, args.out_file);
  });
}

}  // namespace lfr::cli
