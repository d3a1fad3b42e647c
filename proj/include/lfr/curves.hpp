#pragma once

#include <string>
#include <vector>

#include "lfr/image.hpp"
#include "lfr/keypoint.hpp"
#include "lfr/lightfield.hpp"

namespace lfr {

/// Square patch around a central-view keypoint with Gaussian weights
/// (sigma = side / 4) peaking at the patch centre.
struct Template {
  int side = 0;
  int center_u = 0;  // rounded source coordinates
  int center_v = 0;
  double u0 = 0.0;
  double v0 = 0.0;
  std::vector<float> patch;
  std::vector<float> weight;

  int half() const { return side / 2; }
};

/// Throws std::out_of_range when the template does not fit inside `img`.
Template build_template(ImageView img, const Keypoint& kp, double k_template);

/// WNCC scores over a (2*radius_v+1) x (2*radius_u+1) grid of candidate
/// template centres. Row-major with v outer; index (dv + radius_v, du + radius_u).
struct ScoreMap {
  int radius_u = 0;
  int radius_v = 0;
  std::vector<double> scores;

  int width() const { return 2 * radius_u + 1; }
  int height() const { return 2 * radius_v + 1; }
  double at(int du, int dv) const {
    return scores[static_cast<std::size_t>(dv + radius_v) * static_cast<std::size_t>(width()) +
                  static_cast<std::size_t>(du + radius_u)];
  }
};

/// Gaussian-weighted normalized cross-correlation of `tmpl` against `img` with
/// the template centre placed at every integer offset within the radii around
/// (center_u, center_v). Scores lie in [-1, 1]; windows (or templates) with zero
/// weighted variance score 0. Throws std::out_of_range if any window leaves `img`.
ScoreMap wncc(const Template& tmpl, ImageView img, int center_u, int center_v, int radius_u, int radius_v);

/// Stack of 1D WNCC responses, one row per view along the central row
/// (horizontal) or column (vertical) of the view grid.
struct CorrelationEPI {
  Orientation orientation = Orientation::horizontal;
  int half_span = 0;       // rows cover view offsets [-half_span, half_span]
  int pixel_origin = 0;    // pixel coordinate of column 0 along the EPI pixel axis
  int width = 0;
  int keypoint_pixel = 0;  // rounded keypoint coordinate along the pixel axis
  std::vector<double> data;

  int rows() const { return 2 * half_span + 1; }
  int view_offset(int row) const { return row - half_span; }
  double at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
  }
};

struct CurveConfig {
  double k_template = 5.0;
  double corr_mask_thresh = 0.5;
  int view_span = 0;           // 0: full central row/column
  int search_radius = 0;       // 0: twice the template side
  double min_span_frac = 0.75;
  double max_step_px = 3.0;
  double max_slope_px_per_view = 0.0;  // 0 disables the slope bound
};

/// `view_span` must be odd and no larger than the grid along `orientation`. The
/// search radius is shrunk where needed so every window stays inside the views.
/// A positive `max_slope_px_per_view` masks candidates farther than
/// max_slope * |offset| + 1 pixels from the keypoint with a score of -1.
CorrelationEPI build_correlation_epi(const LightField& lf, const Keypoint& kp, const Template& tmpl,
                                     Orientation orientation, int view_span, int search_radius,
                                     double max_slope_px_per_view = 0.0);

struct CurveSample {
  int view_offset = 0;
  double pixel_pos = 0.0;
  double corr_score = 0.0;
};

struct FeatureCurve {
  Orientation orientation = Orientation::horizontal;
  std::vector<CurveSample> samples;  // strictly increasing view_offset
  bool valid = false;
  int requested_views = 0;
  std::string reject_reason;

  /// Pixel position of the central-view sample.
  double center_pos() const;
};

/// Thresholds the correlation EPI, keeps the 8-connected component through the
/// central self-match, takes one parabola-refined peak per view row, then applies
/// the span/step/boundary consistency filters. Never throws for bad data; the
/// returned curve is flagged invalid instead.
FeatureCurve extract_curve(const CorrelationEPI& cepi, const Keypoint& kp, const CurveConfig& cfg);

struct CurvePair {
  FeatureCurve horizontal;
  FeatureCurve vertical;
};

/// Template, correlation EPIs and curves for one keypoint. Keypoints whose
/// template does not fit produce two invalid curves.
CurvePair extract_feature_curves(const LightField& lf, const Keypoint& kp, const CurveConfig& cfg);

}  // namespace lfr
