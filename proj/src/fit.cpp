#include "lfr/fit.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lfr {

namespace {

constexpr double kSlopeDenominatorEps = 1e-6;

// Right singular vectors, with singular values sorted ascending. Rows < 4 are
// padded with zero rows so the full 4x4 V is always available.
struct Svd4 {
  Eigen::Vector4d values;   // ascending
  Eigen::Matrix4d vectors;  // column i pairs with values[i]
};

Svd4 svd4(const DesignMatrix& a) {
  DesignMatrix padded = a;
  if (padded.rows() < 4) {
    padded.conservativeResize(4, Eigen::NoChange);
    padded.bottomRows(4 - a.rows()).setZero();
  }
  Eigen::JacobiSVD<DesignMatrix> svd(padded, Eigen::ComputeFullV);
  const Eigen::Vector4d s = svd.singularValues();  // descending
  Svd4 out;
  for (int i = 0; i < 4; ++i) {
    out.values[i] = s[3 - i];
    out.vectors.col(i) = svd.matrixV().col(3 - i);
  }
  return out;
}

bool block_is_degenerate(const DesignMatrix& a, int column) {
  std::set<double> offsets;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (a(r, column) != 0.0) offsets.insert(a(r, column));
  }
  return offsets.size() < 2;
}

// Deterministic sign: largest-magnitude component positive.
void sign_normalize(Eigen::Vector4d& n) {
  Eigen::Index i;
  n.cwiseAbs().maxCoeff(&i);
  if (n[i] < 0) n = -n;
}

// Rows from whatever samples exist, ignoring validity; used only to report the
// fits of indeterminate features.
DesignMatrix raw_rows(const FeatureCurve& f_h, const FeatureCurve& f_v) {
  const double u_ref = f_h.center_pos();
  const double v_ref = f_v.center_pos();
  if (!std::isfinite(u_ref) || !std::isfinite(v_ref)) return DesignMatrix(0, 4);
  DesignMatrix a(static_cast<Eigen::Index>(f_h.samples.size() + f_v.samples.size()), 4);
  Eigen::Index r = 0;
  for (const CurveSample& s : f_h.samples) a.row(r++) << s.view_offset, 0.0, s.pixel_pos - u_ref, 0.0;
  for (const CurveSample& s : f_v.samples) a.row(r++) << 0.0, s.view_offset, 0.0, s.pixel_pos - v_ref;
  return a;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::lambertian:
      return "lambertian";
    case Verdict::refracted:
      return "refracted";
    case Verdict::indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

std::vector<std::string> FeatureLabel::reason_names() const {
  std::vector<std::string> names;
  if (has(Reason::planar_h)) names.emplace_back("planar_h");
  if (has(Reason::planar_v)) names.emplace_back("planar_v");
  if (has(Reason::slope)) names.emplace_back("slope");
  if (has(Reason::invalid_curves)) names.emplace_back("invalid_curves");
  return names;
}

DesignMatrix assemble_design_matrix(const FeatureCurve& f_h, const FeatureCurve& f_v, int min_samples) {
  if (!f_h.valid || !f_v.valid) throw InsufficientSamplesError("design matrix requires two valid curves");
  const auto n = static_cast<Eigen::Index>(f_h.samples.size() + f_v.samples.size());
  if (n < min_samples) {
    throw InsufficientSamplesError("only " + std::to_string(n) + " curve samples, need " +
                                   std::to_string(min_samples));
  }
  DesignMatrix a = raw_rows(f_h, f_v);
  if (a.rows() != n) throw InsufficientSamplesError("curve lacks a central-view sample");
  return a;
}

PlaneFit fit_plane(const DesignMatrix& a) {
  if (a.rows() < 4) throw std::invalid_argument("plane fit needs at least 4 rows");
  const Svd4 svd = svd4(a);
  PlaneFit fit;
  fit.e1 = svd.values[0];
  fit.e2 = svd.values[1];
  fit.n_h = svd.vectors.col(0);
  fit.n_v = svd.vectors.col(1);
  sign_normalize(fit.n_h);
  sign_normalize(fit.n_v);
  fit.n_rows = static_cast<int>(a.rows());
  fit.degenerate = block_is_degenerate(a, 0) || block_is_degenerate(a, 1);
  return fit;
}

HyperplaneFit fit_hyperplane_xu(const DesignMatrix& a) {
  if (a.rows() < 4) throw std::invalid_argument("hyperplane fit needs at least 4 rows");
  const Svd4 svd = svd4(a);
  HyperplaneFit fit;
  fit.e_min = svd.values[0];
  fit.n = svd.vectors.col(0);
  sign_normalize(fit.n);
  fit.degenerate = block_is_degenerate(a, 0) || block_is_degenerate(a, 1);
  return fit;
}

double curve_tls_slope(const FeatureCurve& curve) {
  const std::size_t n = curve.samples.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double ms = 0.0, mp = 0.0;
  for (const CurveSample& s : curve.samples) {
    ms += s.view_offset;
    mp += s.pixel_pos;
  }
  ms /= static_cast<double>(n);
  mp /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const CurveSample& s : curve.samples) {
    const Eigen::Vector2d d(s.view_offset - ms, s.pixel_pos - mp);
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d dir = eig.eigenvectors().col(1);  // largest eigenvalue
  if (std::abs(dir[0]) < kSlopeDenominatorEps) return std::numeric_limits<double>::quiet_NaN();
  return dir[1] / dir[0];
}

namespace {

// Null vector of the 2x2 system built from components (i, j) of both normals;
// returns q_j / q_i, or NaN when q_i vanishes.
double slope_from_normals(const PlaneFit& fit, int view_col, int pixel_col) {
  Eigen::Matrix2d m;
  m << fit.n_h[view_col], fit.n_h[pixel_col], fit.n_v[view_col], fit.n_v[pixel_col];
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullV);
  const Eigen::Vector2d q = svd.matrixV().col(1);
  if (std::abs(q[0]) < kSlopeDenominatorEps) return std::numeric_limits<double>::quiet_NaN();
  return q[1] / q[0];
}

}  // namespace

SlopeReport compute_slopes(const PlaneFit& fit, const FeatureCurve& f_h, const FeatureCurve& f_v) {
  SlopeReport r;
  double su = std::numeric_limits<double>::quiet_NaN();
  double tv = std::numeric_limits<double>::quiet_NaN();
  if (!fit.degenerate) {
    su = slope_from_normals(fit, 0, 2);
    tv = slope_from_normals(fit, 1, 3);
  }
  if (!std::isfinite(su)) {
    su = curve_tls_slope(f_h);
    r.used_fallback = true;
  }
  if (!std::isfinite(tv)) {
    tv = curve_tls_slope(f_v);
    r.used_fallback = true;
  }
  r.w_su = su;
  r.w_tv = tv;
  if (!std::isfinite(su) || !std::isfinite(tv)) {
    r.degenerate = true;
    r.c = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.c = (su - tv) * (su - tv);
  }
  return r;
}

FeatureLabel relabel(const FeatureLabel& label, const Thresholds& thresholds) {
  FeatureLabel out = label;
  out.reasons = 0;
  if (label.has(Reason::invalid_curves) || label.n_samples < thresholds.min_samples) {
    out.reasons = static_cast<unsigned>(Reason::invalid_curves);
    out.verdict = Verdict::indeterminate;
    return out;
  }
  if (label.fit.e1 > thresholds.planar_thresh) out.reasons |= static_cast<unsigned>(Reason::planar_h);
  if (label.fit.e2 > thresholds.planar_thresh) out.reasons |= static_cast<unsigned>(Reason::planar_v);
  if (!label.slopes.degenerate && label.slopes.c > thresholds.slope_thresh) {
    out.reasons |= static_cast<unsigned>(Reason::slope);
  }
  out.verdict = out.reasons != 0 ? Verdict::refracted : Verdict::lambertian;
  return out;
}

FeatureLabel classify(const FeatureCurve& f_h, const FeatureCurve& f_v, const Keypoint& kp,
                      const Thresholds& thresholds) {
  FeatureLabel label;
  label.keypoint = kp;
  label.n_samples = static_cast<int>(f_h.samples.size() + f_v.samples.size());
  DesignMatrix a;
  try {
    a = assemble_design_matrix(f_h, f_v, thresholds.min_samples);
  } catch (const InsufficientSamplesError&) {
    label.reasons = static_cast<unsigned>(Reason::invalid_curves);
    label.verdict = Verdict::indeterminate;
    const DesignMatrix raw = raw_rows(f_h, f_v);
    if (raw.rows() >= 4) {
      label.fit = fit_plane(raw);
      label.baseline_fit = fit_hyperplane_xu(raw);
      label.slopes = compute_slopes(label.fit, f_h, f_v);
    }
    return label;
  }
  label.fit = fit_plane(a);
  label.baseline_fit = fit_hyperplane_xu(a);
  label.slopes = compute_slopes(label.fit, f_h, f_v);
  return relabel(label, thresholds);
}

Verdict xu_verdict(const FeatureLabel& label, double xu_thresh) {
  if (label.verdict == Verdict::indeterminate) return Verdict::indeterminate;
  return label.baseline_fit.e_min > xu_thresh ? Verdict::refracted : Verdict::lambertian;
}

}  // namespace lfr
