#include "lfr/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lfr {

namespace {

constexpr double kZeroVariance = 1e-12;

double parabolic_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

Template build_template(ImageView img, const Keypoint& kp, double k_template) {
  Template t;
  t.side = template_side(kp.scale, k_template);
  t.u0 = kp.u0;
  t.v0 = kp.v0;
  t.center_u = static_cast<int>(std::lround(kp.u0));
  t.center_v = static_cast<int>(std::lround(kp.v0));
  const int h = t.half();
  if (t.side < 1 || t.center_u - h < 0 || t.center_v - h < 0 || t.center_u + h >= img.width ||
      t.center_v + h >= img.height) {
    throw std::out_of_range("template of side " + std::to_string(t.side) + " at (" + std::to_string(t.center_u) +
                            ", " + std::to_string(t.center_v) + ") exceeds image bounds");
  }
  const double sigma_w = t.side / 4.0;
  const std::size_t n = static_cast<std::size_t>(t.side) * static_cast<std::size_t>(t.side);
  t.patch.resize(n);
  t.weight.resize(n);
  for (int dv = -h; dv <= h; ++dv) {
    for (int du = -h; du <= h; ++du) {
      const std::size_t i = static_cast<std::size_t>(dv + h) * static_cast<std::size_t>(t.side) +
                            static_cast<std::size_t>(du + h);
      t.patch[i] = img.at(t.center_u + du, t.center_v + dv);
      t.weight[i] = static_cast<float>(std::exp(-(du * du + dv * dv) / (2.0 * sigma_w * sigma_w)));
    }
  }
  return t;
}

ScoreMap wncc(const Template& tmpl, ImageView img, int center_u, int center_v, int radius_u, int radius_v) {
  if (radius_u < 0 || radius_v < 0) throw std::invalid_argument("negative search radius");
  const int h = tmpl.half();
  if (center_u - radius_u - h < 0 || center_v - radius_v - h < 0 || center_u + radius_u + h >= img.width ||
      center_v + radius_v + h >= img.height) {
    throw std::out_of_range("WNCC search window exceeds image bounds");
  }

  // Weighted-mean-removed template, pre-multiplied by the weights.
  const std::size_t n = tmpl.patch.size();
  double wsum = 0.0, wp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += tmpl.weight[i];
    wp += static_cast<double>(tmpl.weight[i]) * tmpl.patch[i];
  }
  const double pmean = wp / wsum;
  std::vector<double> a(n);
  double sp = 0.0, spp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = tmpl.patch[i] - pmean;
    a[i] = tmpl.weight[i] * d;
    sp += a[i] * d;
    spp += static_cast<double>(tmpl.weight[i]) * tmpl.patch[i] * tmpl.patch[i];
  }
  const bool flat_template = sp <= kZeroVariance * std::max(spp, std::numeric_limits<double>::min());

  ScoreMap map;
  map.radius_u = radius_u;
  map.radius_v = radius_v;
  map.scores.assign(static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height()), 0.0);
  if (flat_template) return map;

  const int side = tmpl.side;
  for (int dv = -radius_v; dv <= radius_v; ++dv) {
    for (int du = -radius_u; du <= radius_u; ++du) {
      const int u_left = center_u + du - h;
      const int v_top = center_v + dv - h;
      double sq = 0.0, sqq = 0.0, num = 0.0;
      for (int y = 0; y < side; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(side);
        for (int x = 0; x < side; ++x) {
          const double q = img.at(u_left + x, v_top + y);
          const double w = tmpl.weight[row + static_cast<std::size_t>(x)];
          sq += w * q;
          sqq += w * q * q;
          num += a[row + static_cast<std::size_t>(x)] * q;
        }
      }
      const double var_q = sqq - sq * sq / wsum;
      double score = 0.0;
      if (var_q > kZeroVariance * std::max(sqq, std::numeric_limits<double>::min())) {
        score = std::clamp(num / std::sqrt(sp * var_q), -1.0, 1.0);
      }
      map.scores[static_cast<std::size_t>(dv + radius_v) * static_cast<std::size_t>(map.width()) +
                 static_cast<std::size_t>(du + radius_u)] = score;
    }
  }
  return map;
}

CorrelationEPI build_correlation_epi(const LightField& lf, const Keypoint& kp, const Template& tmpl,
                                     Orientation orientation, int view_span, int search_radius,
                                     double max_slope_px_per_view) {
  const bool horizontal = orientation == Orientation::horizontal;
  const int grid = horizontal ? lf.n_s() : lf.n_t();
  if (view_span < 1 || view_span % 2 == 0 || view_span > grid) {
    throw std::invalid_argument("view_span must be odd and within the view grid");
  }
  const int extent = horizontal ? lf.n_u() : lf.n_v();
  const int center = horizontal ? tmpl.center_u : tmpl.center_v;
  const int h = tmpl.half();
  const int radius = std::min({search_radius, center - h, extent - 1 - h - center});
  if (radius < 0) throw std::out_of_range("template does not fit along the EPI pixel axis");

  CorrelationEPI cepi;
  cepi.orientation = orientation;
  cepi.half_span = view_span / 2;
  cepi.pixel_origin = center - radius;
  cepi.width = 2 * radius + 1;
  cepi.keypoint_pixel = static_cast<int>(std::lround(horizontal ? kp.u0 : kp.v0));
  cepi.data.resize(static_cast<std::size_t>(cepi.rows()) * static_cast<std::size_t>(cepi.width));

  for (int row = 0; row < cepi.rows(); ++row) {
    const int offset = cepi.view_offset(row);
    const ImageView view = horizontal ? lf.view(lf.center_s() + offset, lf.center_t())
                                      : lf.view(lf.center_s(), lf.center_t() + offset);
    const ScoreMap map = horizontal ? wncc(tmpl, view, tmpl.center_u, tmpl.center_v, radius, 0)
                                    : wncc(tmpl, view, tmpl.center_u, tmpl.center_v, 0, radius);
    for (int col = 0; col < cepi.width; ++col) {
      double score = map.scores[static_cast<std::size_t>(col)];
      if (max_slope_px_per_view > 0.0 && std::abs(col - radius) > max_slope_px_per_view * std::abs(offset) + 1.0) {
        score = -1.0;
      }
      cepi.data[static_cast<std::size_t>(row) * static_cast<std::size_t>(cepi.width) + static_cast<std::size_t>(col)] =
          score;
    }
  }
  return cepi;
}

double FeatureCurve::center_pos() const {
  for (const CurveSample& s : samples) {
    if (s.view_offset == 0) return s.pixel_pos;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

FeatureCurve extract_curve(const CorrelationEPI& cepi, const Keypoint& kp, const CurveConfig& cfg) {
  FeatureCurve curve;
  curve.orientation = cepi.orientation;
  curve.requested_views = cepi.rows();
  const int rows = cepi.rows();
  const int width = cepi.width;
  const int center_row = cepi.half_span;
  const double kp_pixel = cepi.orientation == Orientation::horizontal ? kp.u0 : kp.v0;

  auto reject = [&](std::string reason) {
    curve.valid = false;
    curve.reject_reason = std::move(reason);
    return curve;
  };

  // Self-match seed: best central-row column within 1 px of the keypoint.
  const int kp_col = cepi.keypoint_pixel - cepi.pixel_origin;
  int seed = -1;
  for (int col = std::max(0, kp_col - 1); col <= std::min(width - 1, kp_col + 1); ++col) {
    if (seed < 0 || cepi.at(center_row, col) > cepi.at(center_row, seed)) seed = col;
  }
  if (seed < 0) return reject("empty correlation EPI");

  if (cepi.at(center_row, seed) < cfg.corr_mask_thresh) {
    curve.samples.push_back({0, cepi.pixel_origin + static_cast<double>(seed), cepi.at(center_row, seed)});
    return reject("self-match below mask threshold");
  }

  // 8-connected flood fill of the thresholded mask from the seed.
  std::vector<unsigned char> in_component(static_cast<std::size_t>(rows) * static_cast<std::size_t>(width), 0);
  auto idx = [width](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c); };
  std::vector<std::pair<int, int>> stack{{center_row, seed}};
  in_component[idx(center_row, seed)] = 1;
  bool touches_boundary = false;
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    stack.pop_back();
    if (c == 0 || c == width - 1) touches_boundary = true;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int nr = r + dr, nc = c + dc;
        if (nr < 0 || nr >= rows || nc < 0 || nc >= width) continue;
        if (in_component[idx(nr, nc)] || cepi.at(nr, nc) < cfg.corr_mask_thresh) continue;
        in_component[idx(nr, nc)] = 1;
        stack.emplace_back(nr, nc);
      }
    }
  }

  // Per-row component maximum, propagating outward from the central row so that
  // ties resolve to the column nearest the neighbouring row's choice.
  std::vector<int> chosen(static_cast<std::size_t>(rows), -1);
  auto pick = [&](int r, int prev_col) {
    int best = -1;
    for (int c = 0; c < width; ++c) {
      if (!in_component[idx(r, c)]) continue;
      if (best < 0 || cepi.at(r, c) > cepi.at(r, best) ||
          (cepi.at(r, c) == cepi.at(r, best) && std::abs(c - prev_col) < std::abs(best - prev_col))) {
        best = c;
      }
    }
    return best;
  };
  chosen[static_cast<std::size_t>(center_row)] = seed;
  for (int r = center_row + 1; r < rows; ++r) {
    chosen[static_cast<std::size_t>(r)] = pick(r, chosen[static_cast<std::size_t>(r - 1)]);
    if (chosen[static_cast<std::size_t>(r)] < 0) break;
  }
  for (int r = center_row - 1; r >= 0; --r) {
    chosen[static_cast<std::size_t>(r)] = pick(r, chosen[static_cast<std::size_t>(r + 1)]);
    if (chosen[static_cast<std::size_t>(r)] < 0) break;
  }

  for (int r = 0; r < rows; ++r) {
    const int c = chosen[static_cast<std::size_t>(r)];
    if (c < 0) continue;
    double offset = 0.0;
    if (c > 0 && c < width - 1) offset = parabolic_offset(cepi.at(r, c - 1), cepi.at(r, c), cepi.at(r, c + 1));
    curve.samples.push_back({cepi.view_offset(r), cepi.pixel_origin + c + offset, cepi.at(r, c)});
  }

  const double center = curve.center_pos();
  if (!(std::abs(center - kp_pixel) <= 1.0)) return reject("self-match drifted from keypoint");
  if (static_cast<double>(curve.samples.size()) < cfg.min_span_frac * rows) return reject("insufficient view span");
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const double step = std::abs(curve.samples[i].pixel_pos - curve.samples[i - 1].pixel_pos) /
                        (curve.samples[i].view_offset - curve.samples[i - 1].view_offset);
    if (step > cfg.max_step_px) return reject("step exceeds max_step_px");
  }
  if (touches_boundary) return reject("component touches search window boundary");
  curve.valid = true;
  return curve;
}

CurvePair extract_feature_curves(const LightField& lf, const Keypoint& kp, const CurveConfig& cfg) {
  CurvePair pair;
  pair.horizontal.orientation = Orientation::horizontal;
  pair.vertical.orientation = Orientation::vertical;
  pair.horizontal.requested_views = cfg.view_span > 0 ? cfg.view_span : lf.n_s();
  pair.vertical.requested_views = cfg.view_span > 0 ? cfg.view_span : lf.n_t();

  const ImageView center = lf.view(lf.center_s(), lf.center_t());
  Template tmpl;
  try {
    tmpl = build_template(center, kp, cfg.k_template);
  } catch (const std::out_of_range&) {
    pair.horizontal.reject_reason = pair.vertical.reject_reason = "template exceeds image bounds";
    return pair;
  }
  const int radius = cfg.search_radius > 0 ? cfg.search_radius : 2 * tmpl.side;

  auto one = [&](Orientation o, FeatureCurve& out) {
    const int grid = o == Orientation::horizontal ? lf.n_s() : lf.n_t();
    const int span = cfg.view_span > 0 ? std::min(cfg.view_span, grid) : grid;
    try {
      const CorrelationEPI cepi = build_correlation_epi(lf, kp, tmpl, o, span, radius, cfg.max_slope_px_per_view);
      out = extract_curve(cepi, kp, cfg);
    } catch (const std::out_of_range& e) {
      out.valid = false;
      out.reject_reason = e.what();
    }
  };
  one(Orientation::horizontal, pair.horizontal);
  one(Orientation::vertical, pair.vertical);
  return pair;
}

}  // namespace lfr
