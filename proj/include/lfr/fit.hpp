#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lfr/curves.hpp"
#include "lfr/keypoint.hpp"

namespace lfr {

/// Stacked LFD rows (s, t, du, dv): horizontal-curve rows first, then vertical.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;

/// Best-fit 4D plane through the origin: the two right singular vectors of the
/// smallest singular values. e1 <= e2 are those singular values.
struct PlaneFit {
  Eigen::Vector4d n_h = Eigen::Vector4d::Zero();
  Eigen::Vector4d n_v = Eigen::Vector4d::Zero();
  double e1 = 0.0;
  double e2 = 0.0;
  int n_rows = 0;
  bool degenerate = false;
};

/// Single-hyperplane baseline fit: smallest singular value and its vector.
struct HyperplaneFit {
  Eigen::Vector4d n = Eigen::Vector4d::Zero();
  double e_min = 0.0;
  bool degenerate = false;
};

struct SlopeReport {
  double w_su = 0.0;  // du/ds, pixels per view
  double w_tv = 0.0;  // dv/dt, pixels per view
  double c = 0.0;     // (w_su - w_tv)^2
  bool degenerate = false;
  bool used_fallback = false;
};

class InsufficientSamplesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rows are (s, 0, pos - pos_0, 0) for the horizontal curve and
/// (0, t, 0, pos - pos_0) for the vertical curve, where pos_0 is the curve's
/// central-view sample. Throws InsufficientSamplesError when either curve is
/// invalid or the total sample count is below `min_samples`.
DesignMatrix assemble_design_matrix(const FeatureCurve& f_h, const FeatureCurve& f_v, int min_samples = 8);

/// Throws std::invalid_argument for fewer than 4 rows. Flags `degenerate` when
/// either block of rows has fewer than two distinct non-zero view offsets.
PlaneFit fit_plane(const DesignMatrix& a);
HyperplaneFit fit_hyperplane_xu(const DesignMatrix& a);

/// Slopes from the plane normals: the null vector q = (q_s, q_u) of
/// [[n_h0, n_h2], [n_v0, n_v2]] gives w_su = q_u / q_s (and likewise for t, v
/// from components 1 and 3). Falls back to a total-least-squares line through
/// each curve's (view, pixel) samples when the normals are degenerate.
SlopeReport compute_slopes(const PlaneFit& fit, const FeatureCurve& f_h, const FeatureCurve& f_v);

/// Total-least-squares slope d(pixel)/d(view) of one curve; NaN when undefined.
double curve_tls_slope(const FeatureCurve& curve);

struct Thresholds {
  double planar_thresh = 1.5;
  double slope_thresh = 0.05;
  double xu_thresh = 1.5;
  int min_samples = 8;
};

enum class Verdict { lambertian, refracted, indeterminate };
const char* to_string(Verdict v);

enum class Reason : unsigned { planar_h = 1u, planar_v = 2u, slope = 4u, invalid_curves = 8u };

struct FeatureLabel {
  Keypoint keypoint;
  Verdict verdict = Verdict::indeterminate;
  unsigned reasons = 0;  // bitmask of Reason
  PlaneFit fit;
  SlopeReport slopes;
  HyperplaneFit baseline_fit;
  int n_samples = 0;

  bool has(Reason r) const { return (reasons & static_cast<unsigned>(r)) != 0; }
  std::vector<std::string> reason_names() const;
};

/// Fits both models and applies `thresholds`. A feature is refracted when
/// e1 > planar_thresh, e2 > planar_thresh, or c > slope_thresh; indeterminate when
/// either curve is invalid or there are fewer than min_samples samples.
FeatureLabel classify(const FeatureCurve& f_h, const FeatureCurve& f_v, const Keypoint& kp,
                      const Thresholds& thresholds);

/// Re-applies thresholds to an already-fitted label (no refitting).
FeatureLabel relabel(const FeatureLabel& label, const Thresholds& thresholds);

/// Baseline decision: refracted iff e_min > xu_thresh (indeterminate stays so).
Verdict xu_verdict(const FeatureLabel& label, double xu_thresh);

}  // namespace lfr
