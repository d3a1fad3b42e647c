#include "lfr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"
#include "lfr/pipeline.hpp"

namespace lfr {

using nlohmann::json;

const char* to_string(Method m) { return m == Method::proposed ? "proposed" : "xu_baseline"; }

EvalResult evaluate(const std::vector<FeatureLabel>& labels, const Image& mask, Method method,
                    const Thresholds& thresholds, const Image* exclusion) {
  EvalResult result;
  result.method = method;
  result.thresholds = thresholds;
  Counts& n = result.counts;
  for (const FeatureLabel& label : labels) {
    const int u = static_cast<int>(std::lround(label.keypoint.u0));
    const int v = static_cast<int>(std::lround(label.keypoint.v0));
    if (!mask.contains(u, v)) throw std::out_of_range("keypoint outside ground-truth mask");
    if (exclusion && exclusion->contains(u, v) && exclusion->at(u, v) > 0.5f) {
      ++n.excluded;
      continue;
    }
    const Verdict verdict = method == Method::proposed ? label.verdict : xu_verdict(label, thresholds.xu_thresh);
    if (verdict == Verdict::indeterminate) {
      ++n.indeterminate;
      continue;
    }
    const bool truth = mask.at(u, v) > 0.5f;
    const bool flagged = verdict == Verdict::refracted;
    if (truth && flagged) ++n.tp;
    if (truth && !flagged) ++n.fn;
    if (!truth && flagged) ++n.fp;
    if (!truth && !flagged) ++n.tn;
  }
  if (n.tp + n.fn > 0) result.tpr = static_cast<double>(n.tp) / (n.tp + n.fn);
  if (n.fp + n.tn > 0) result.fpr = static_cast<double>(n.fp) / (n.fp + n.tn);
  return result;
}

ThresholdGrid default_threshold_grid() {
  auto logspace = [](double lo, double hi, int count) {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return v;
  };
  ThresholdGrid g;
  g.planar = logspace(0.05, 50.0, 31);
  g.slope = logspace(1e-4, 10.0, 31);
  g.xu = logspace(0.01, 50.0, 61);
  return g;
}

std::vector<EvalResult> sweep_labels(const std::vector<FeatureLabel>& labels, const Image& mask,
                                     const ThresholdGrid& grid, const Thresholds& base, const Image* exclusion) {
  if ((grid.planar.empty() || grid.slope.empty()) && grid.xu.empty()) {
    throw std::invalid_argument("threshold grid is empty");
  }
  std::vector<EvalResult> out;
  std::vector<FeatureLabel> relabelled(labels.size());
  for (double planar : grid.planar) {
    for (double slope : grid.slope) {
      Thresholds t = base;
      t.planar_thresh = planar;
      t.slope_thresh = slope;
      for (std::size_t i = 0; i < labels.size(); ++i) relabelled[i] = relabel(labels[i], t);
      out.push_back(evaluate(relabelled, mask, Method::proposed, t, exclusion));
    }
  }
  for (double xu : grid.xu) {
    Thresholds t = base;
    t.xu_thresh = xu;
    out.push_back(evaluate(labels, mask, Method::xu_baseline, t, exclusion));
  }
  return out;
}

std::vector<EvalResult> sweep_thresholds(const LightField& lf, const std::vector<Keypoint>& keypoints,
                                         const Image& mask, const ThresholdGrid& grid, const PipelineConfig& cfg,
                                         unsigned threads, const Image* exclusion) {
  const std::vector<FeatureLabel> labels = analyze_features(lf, keypoints, cfg, threads);
  return sweep_labels(labels, mask, grid, cfg.thresholds, exclusion);
}

std::optional<EvalResult> best_tpr_at_fpr(const std::vector<EvalResult>& results, Method method, double max_fpr) {
  std::optional<EvalResult> best;
  for (const EvalResult& r : results) {
    if (r.method != method || !r.fpr || !r.tpr || *r.fpr > max_fpr) continue;
    if (!best || *r.tpr > *best->tpr || (*r.tpr == *best->tpr && *r.fpr < *best->fpr)) best = r;
  }
  return best;
}

std::vector<std::pair<EvalResult, EvalResult>> match_operating_points(const std::vector<EvalResult>& results) {
  std::vector<std::pair<EvalResult, EvalResult>> pairs;
  for (const EvalResult& xu : results) {
    if (xu.method != Method::xu_baseline || !xu.fpr) continue;
    const EvalResult* best = nullptr;
    for (const EvalResult& p : results) {
      if (p.method != Method::proposed || !p.fpr) continue;
      if (!best) {
        best = &p;
        continue;
      }
      const double d = std::abs(*p.fpr - *xu.fpr);
      const double db = std::abs(*best->fpr - *xu.fpr);
      if (d < db || (d == db && p.tpr.value_or(0.0) > best->tpr.value_or(0.0))) best = &p;
    }
    if (best) pairs.emplace_back(xu, *best);
  }
  return pairs;
}

RefractionRatio refraction_ratio(const std::vector<FeatureLabel>& labels) {
  if (labels.empty()) throw std::invalid_argument("refraction ratio of an empty label list");
  RefractionRatio r;
  for (const FeatureLabel& l : labels) {
    if (l.verdict == Verdict::indeterminate) continue;
    ++r.i_t;
    if (l.verdict == Verdict::refracted) ++r.i_r;
  }
  r.r = r.i_t > 0 ? static_cast<double>(r.i_r) / r.i_t : 0.0;
  return r;
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string fmt_rate(const std::optional<double>& x) {
  if (!x) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *x);
  return buf;
}

json rate_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

std::string results_csv(const std::vector<EvalResult>& results) {
  std::string out = "method,planar_thresh,slope_thresh,xu_thresh,tp,fp,tn,fn,indeterminate,tpr,fpr\n";
  for (const EvalResult& r : results) {
    out += std::string(to_string(r.method)) + "," + fmt_double(r.thresholds.planar_thresh) + "," +
           fmt_double(r.thresholds.slope_thresh) + "," + fmt_double(r.thresholds.xu_thresh) + "," +
           std::to_string(r.counts.tp) + "," + std::to_string(r.counts.fp) + "," + std::to_string(r.counts.tn) +
           "," + std::to_string(r.counts.fn) + "," + std::to_string(r.counts.indeterminate) + "," +
           fmt_rate(r.tpr) + "," + fmt_rate(r.fpr) + "\n";
  }
  return out;
}

void emit_report(const std::vector<EvalResult>& results, const std::filesystem::path& base) {
  std::filesystem::path csv_path = base;
  csv_path += ".csv";
  std::filesystem::path json_path = base;
  json_path += ".json";
  {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot write '" + csv_path.string() + "'");
    out << results_csv(results);
    if (!out) throw IoError("write failed for '" + csv_path.string() + "'");
  }
  json arr = json::array();
  for (const EvalResult& r : results) {
    arr.push_back({{"method", to_string(r.method)},
                   {"planar_thresh", r.thresholds.planar_thresh},
                   {"slope_thresh", r.thresholds.slope_thresh},
                   {"xu_thresh", r.thresholds.xu_thresh},
                   {"min_samples", r.thresholds.min_samples},
                   {"tp", r.counts.tp},
                   {"fp", r.counts.fp},
                   {"tn", r.counts.tn},
                   {"fn", r.counts.fn},
                   {"indeterminate", r.counts.indeterminate},
                   {"excluded", r.counts.excluded},
                   {"tpr", rate_json(r.tpr)},
                   {"fpr", rate_json(r.fpr)}});
  }
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write '" + json_path.string() + "'");
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("write failed for '" + json_path.string() + "'");
}

RgbImage annotate_view(const Image& central, const std::vector<FeatureLabel>& labels) {
  RgbImage out(central.width, central.height);
  for (int v = 0; v < central.height; ++v) {
    for (int u = 0; u < central.width; ++u) {
      const auto g = static_cast<unsigned char>(std::lround(std::clamp(central.at(u, v), 0.0f, 1.0f) * 255.0f));
      out.at(u, v) = Rgb8{g, g, g};
    }
  }
  auto plot = [&](int u, int v, Rgb8 c) {
    if (u >= 0 && v >= 0 && u < out.width && v < out.height) out.at(u, v) = c;
  };
  for (const FeatureLabel& l : labels) {
    Rgb8 colour{128, 128, 128};
    if (l.verdict == Verdict::lambertian) colour = Rgb8{0, 0, 255};
    if (l.verdict == Verdict::refracted) colour = Rgb8{255, 0, 0};
    const int cu = static_cast<int>(std::lround(l.keypoint.u0));
    const int cv = static_cast<int>(std::lround(l.keypoint.v0));
    const double radius = std::max(3.0, l.keypoint.scale);
    const int steps = static_cast<int>(std::ceil(2.0 * M_PI * radius)) + 8;
    for (int i = 0; i < steps; ++i) {
      const double a = 2.0 * M_PI * i / steps;
      plot(static_cast<int>(std::lround(cu + radius * std::cos(a))),
           static_cast<int>(std::lround(cv + radius * std::sin(a))), colour);
    }
    for (int d = -2; d <= 2; ++d) {
      plot(cu + d, cv, colour);
      plot(cu, cv + d, colour);
    }
  }
  return out;
}

}  // namespace lfr
