#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfr/config.hpp"
#include "lfr/fit.hpp"
#include "lfr/image.hpp"
#include "lfr/lightfield.hpp"

namespace lfr {

enum class Method { proposed, xu_baseline };
const char* to_string(Method m);

struct Counts {
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;
  int indeterminate = 0;
  int excluded = 0;  // keypoints inside an exclusion region; counted nowhere else

  int total() const { return tp + fp + tn + fn + indeterminate + excluded; }
};

/// Rates are empty when their denominator is zero.
struct EvalResult {
  Method method = Method::proposed;
  Thresholds thresholds;
  Counts counts;
  std::optional<double> tpr;
  std::optional<double> fpr;
};

/// Scores labels against a central-view ground-truth mask. A keypoint is truly
/// refracted iff mask(round(u0), round(v0)) is set. The proposed method uses each
/// label's stored verdict; the baseline uses e_min > thresholds.xu_thresh.
/// Indeterminate labels are counted but excluded from both rates. Keypoints that
/// fall inside the optional `exclusion` image are tallied as `excluded` only.
/// Throws std::out_of_range for keypoints outside the mask.
EvalResult evaluate(const std::vector<FeatureLabel>& labels, const Image& mask, Method method,
                    const Thresholds& thresholds, const Image* exclusion = nullptr);

struct ThresholdGrid {
  std::vector<double> planar;
  std::vector<double> slope;
  std::vector<double> xu;
};

/// Log-spaced grid covering several decades around the default thresholds.
ThresholdGrid default_threshold_grid();

/// Proposed-method results for every (planar, slope) pair followed by baseline
/// results for every xu value. Labels are relabelled, never refitted.
std::vector<EvalResult> sweep_labels(const std::vector<FeatureLabel>& labels, const Image& mask,
                                     const ThresholdGrid& grid, const Thresholds& base,
                                     const Image* exclusion = nullptr);

/// Full sweep from a light field: curves are extracted once, then relabelled.
/// Throws std::invalid_argument for an empty grid.
std::vector<EvalResult> sweep_thresholds(const LightField& lf, const std::vector<Keypoint>& keypoints,
                                         const Image& mask, const ThresholdGrid& grid, const PipelineConfig& cfg,
                                         unsigned threads = 0, const Image* exclusion = nullptr);

/// Highest-TPR result of `method` whose FPR is defined and <= max_fpr (ties: lower FPR).
std::optional<EvalResult> best_tpr_at_fpr(const std::vector<EvalResult>& results, Method method, double max_fpr);

/// Nearest-FPR pairing: for each baseline result, the proposed result whose FPR
/// is closest (ties: higher TPR).
std::vector<std::pair<EvalResult, EvalResult>> match_operating_points(const std::vector<EvalResult>& results);

struct RefractionRatio {
  double r = 0.0;
  int i_r = 0;
  int i_t = 0;
};

/// i_r counts refracted verdicts, i_t all determinate ones. Throws
/// std::invalid_argument for an empty label list.
RefractionRatio refraction_ratio(const std::vector<FeatureLabel>& labels);

/// Writes `<base>.csv` and `<base>.json`. CSV columns: method, planar_thresh,
/// slope_thresh, xu_thresh, tp, fp, tn, fn, indeterminate, tpr, fpr.
void emit_report(const std::vector<EvalResult>& results, const std::filesystem::path& base);
std::string results_csv(const std::vector<EvalResult>& results);

/// Central view with Lambertian keypoints in blue, refracted in red and
/// indeterminate in gray.
RgbImage annotate_view(const Image& central, const std::vector<FeatureLabel>& labels);

}  // namespace lfr
