#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"
#include "lfr/eval.hpp"
#include "lfr/pipeline.hpp"
#include "lfr/synth.hpp"
#include "test_support.hpp"

namespace {

using lfr::FeatureLabel;
using lfr::Method;
using lfr::Verdict;

FeatureLabel make_label(double u, double v, Verdict verdict) {
  FeatureLabel l;
  l.keypoint.u0 = u;
  l.keypoint.v0 = v;
  l.keypoint.scale = 2.0;
  l.verdict = verdict;
  l.n_samples = 18;
  if (verdict == Verdict::refracted) l.reasons = static_cast<unsigned>(lfr::Reason::slope);
  if (verdict == Verdict::indeterminate) l.reasons = static_cast<unsigned>(lfr::Reason::invalid_curves);
  return l;
}

// Mask with the left half set.
lfr::Image half_mask() {
  lfr::Image m(40, 20);
  for (int v = 0; v < 20; ++v)
    for (int u = 0; u < 20; ++u) m.at(u, v) = 1.0f;
  return m;
}

std::vector<FeatureLabel> random_labels(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> pos_u(0.0, 39.4), pos_v(0.0, 19.4), err(0.0, 3.0), c(0.0, 0.2);
  std::vector<FeatureLabel> labels;
  for (int i = 0; i < n; ++i) {
    FeatureLabel l = make_label(pos_u(rng), pos_v(rng), Verdict::lambertian);
    l.fit.e1 = err(rng);
    l.fit.e2 = l.fit.e1 + err(rng);
    l.baseline_fit.e_min = l.fit.e1 * 0.5;
    l.slopes.c = c(rng);
    if (i % 9 == 0) l.reasons = static_cast<unsigned>(lfr::Reason::invalid_curves);
    labels.push_back(lfr::relabel(l, lfr::Thresholds{}));
  }
  return labels;
}

lfr::Counts recount(const std::vector<FeatureLabel>& labels, const lfr::Image& mask, Method m, double xu) {
  lfr::Counts n;
  for (const auto& l : labels) {
    Verdict verdict = l.verdict;
    if (m == Method::xu_baseline && verdict != Verdict::indeterminate)
      verdict = l.baseline_fit.e_min > xu ? Verdict::refracted : Verdict::lambertian;
    const bool truth = mask.at(static_cast<int>(std::floor(l.keypoint.u0 + 0.5)),
                               static_cast<int>(std::floor(l.keypoint.v0 + 0.5))) != 0.0f;
    switch (verdict) {
      case Verdict::indeterminate: n.indeterminate++; break;
      case Verdict::refracted: (truth ? n.tp : n.fp)++; break;
      case Verdict::lambertian: (truth ? n.fn : n.tn)++; break;
    }
  }
  return n;
}

void expect_counts_eq(const lfr::Counts& a, const lfr::Counts& b) {
  EXPECT_EQ(a.tp, b.tp);
  EXPECT_EQ(a.fp, b.fp);
  EXPECT_EQ(a.tn, b.tn);
  EXPECT_EQ(a.fn, b.fn);
  EXPECT_EQ(a.indeterminate, b.indeterminate);
}

TEST(Evaluate, AllLambertianNoneFlagged) {
  std::vector<FeatureLabel> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(make_label(25.0 + i, 5.0, Verdict::lambertian));
  const auto r = lfr::evaluate(labels, half_mask(), Method::proposed, {});
  EXPECT_FALSE(r.tpr.has_value());
  ASSERT_TRUE(r.fpr.has_value());
  EXPECT_EQ(*r.fpr, 0.0);
  EXPECT_EQ(r.counts.tn, 10);
}

TEST(Evaluate, ThirtyFiveInMaskTwentyFiveFlagged) {
  std::vector<FeatureLabel> labels;
  for (int i = 0; i < 35; ++i)
    labels.push_back(make_label(i % 20, i / 20 * 3.0, i < 25 ? Verdict::refracted : Verdict::lambertian));
  const auto r = lfr::evaluate(labels, half_mask(), Method::proposed, {});
  ASSERT_TRUE(r.tpr.has_value());
  EXPECT_NEAR(*r.tpr, 0.714, 0.0005);
  EXPECT_EQ(r.counts.tp, 25);
  EXPECT_EQ(r.counts.fn, 10);
  EXPECT_FALSE(r.fpr.has_value());
}

TEST(Evaluate, MatchesRecountAndCloses) {
  std::mt19937 rng(99);
  const lfr::Image mask = half_mask();
  for (int trial = 0; trial < 20; ++trial) {
    const auto labels = random_labels(rng, 200);
    for (Method m : {Method::proposed, Method::xu_baseline}) {
      lfr::Thresholds t;
      t.xu_thresh = 0.3 + 0.1 * trial;
      const auto r = lfr::evaluate(labels, mask, m, t);
      expect_counts_eq(r.counts, recount(labels, mask, m, t.xu_thresh));
      EXPECT_EQ(r.counts.tp + r.counts.fp + r.counts.tn + r.counts.fn + r.counts.indeterminate, 200);
      EXPECT_EQ(r.counts.excluded, 0);
      if (r.tpr) EXPECT_DOUBLE_EQ(*r.tpr, double(r.counts.tp) / (r.counts.tp + r.counts.fn));
      if (r.fpr) EXPECT_DOUBLE_EQ(*r.fpr, double(r.counts.fp) / (r.counts.fp + r.counts.tn));
    }
  }
}

TEST(Evaluate, RoundsToNearestPixelAndChecksBounds) {
  const lfr::Image mask = half_mask();
  // 19.4 rounds into the mask, 19.6 out of it.
  auto r = lfr::evaluate({make_label(19.4, 3.0, Verdict::refracted), make_label(19.6, 3.0, Verdict::refracted)}, mask,
                         Method::proposed, {});
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.fp, 1);
  EXPECT_THROW(lfr::evaluate({make_label(39.6, 3.0, Verdict::lambertian)}, mask, Method::proposed, {}),
               std::out_of_range);
  EXPECT_THROW(lfr::evaluate({make_label(-0.6, 3.0, Verdict::lambertian)}, mask, Method::proposed, {}),
               std::out_of_range);
}

TEST(Evaluate, IndeterminateCountedButNotRated) {
  const auto r = lfr::evaluate({make_label(1, 1, Verdict::indeterminate), make_label(30, 1, Verdict::indeterminate),
                                make_label(2, 1, Verdict::refracted)},
                               half_mask(), Method::xu_baseline, {});
  EXPECT_EQ(r.counts.indeterminate, 2);
  EXPECT_EQ(r.counts.fn, 1);  // e_min 0 is below xu_thresh
  EXPECT_EQ(*r.tpr, 0.0);
  EXPECT_FALSE(r.fpr.has_value());
}

TEST(Evaluate, ExclusionRegion) {
  lfr::Image excl(40, 20);
  excl.at(5, 5) = 1.0f;
  const auto r = lfr::evaluate({make_label(5.2, 4.9, Verdict::lambertian), make_label(6, 5, Verdict::refracted)},
                               half_mask(), Method::proposed, {}, &excl);
  EXPECT_EQ(r.counts.excluded, 1);
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.total(), 2);
  EXPECT_EQ(*r.tpr, 1.0);
}

TEST(Sweep, LimitsAndShape) {
  std::mt19937 rng(5);
  const lfr::Image mask = half_mask();
  const auto labels = random_labels(rng, 300);
  lfr::ThresholdGrid grid;
  grid.planar = {0.0, 1.0, std::numeric_limits<double>::infinity()};
  grid.slope = {0.0, 0.05, std::numeric_limits<double>::infinity()};
  grid.xu = {0.0, std::numeric_limits<double>::infinity()};
  const auto results = lfr::sweep_labels(labels, mask, grid, {});
  ASSERT_EQ(results.size(), 11u);
  const auto& none = results[8];
  EXPECT_EQ(none.counts.tp + none.counts.fp, 0);
  EXPECT_EQ(*none.fpr, 0.0);
  const auto& all = results[0];
  EXPECT_EQ(all.counts.fn + all.counts.tn, 0);
  EXPECT_EQ(*all.tpr, 1.0);
  EXPECT_EQ(all.counts.indeterminate, recount(labels, mask, Method::proposed, 0).indeterminate);
  EXPECT_EQ(results[9].method, Method::xu_baseline);
  EXPECT_EQ(results[10].counts.tp + results[10].counts.fp, 0);
  EXPECT_THROW(lfr::sweep_labels(labels, mask, lfr::ThresholdGrid{}, {}), std::invalid_argument);
}

TEST(Sweep, RaisingThresholdsNeverRaisesTpr) {
  std::mt19937 rng(17);
  const lfr::Image mask = half_mask();
  const auto labels = random_labels(rng, 400);
  const lfr::ThresholdGrid grid = lfr::default_threshold_grid();
  const auto results = lfr::sweep_labels(labels, mask, grid, {});
  ASSERT_EQ(results.size(), grid.planar.size() * grid.slope.size() + grid.xu.size());
  const std::size_t ns = grid.slope.size();
  for (std::size_t i = 0; i + 1 < grid.planar.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ns; ++j) {
      const double here = results[i * ns + j].tpr.value();
      EXPECT_LE(results[(i + 1) * ns + j].tpr.value(), here);
      EXPECT_LE(results[i * ns + j + 1].tpr.value(), here);
      EXPECT_LE(results[(i + 1) * ns + j + 1].tpr.value(), here);
    }
  }
  const std::size_t base = grid.planar.size() * ns;
  for (std::size_t k = base; k + 1 < results.size(); ++k) EXPECT_LE(results[k + 1].tpr.value(), results[k].tpr.value());
}

TEST(Sweep, BestAndMatchedOperatingPoints) {
  auto point = [](Method m, double tpr, double fpr) {
    lfr::EvalResult r;
    r.method = m;
    r.tpr = tpr;
    r.fpr = fpr;
    return r;
  };
  const std::vector<lfr::EvalResult> results = {
      point(Method::proposed, 0.9, 0.2), point(Method::proposed, 0.7, 0.08), point(Method::proposed, 0.7, 0.02),
      point(Method::proposed, 0.3, 0.0), point(Method::xu_baseline, 0.2, 0.05), point(Method::xu_baseline, 0.5, 0.15)};
  const auto best = lfr::best_tpr_at_fpr(results, Method::proposed, 0.1);
  ASSERT_TRUE(best);
  EXPECT_EQ(*best->tpr, 0.7);
  EXPECT_EQ(*best->fpr, 0.02);
  EXPECT_EQ(*lfr::best_tpr_at_fpr(results, Method::xu_baseline, 0.1)->tpr, 0.2);
  EXPECT_FALSE(lfr::best_tpr_at_fpr(results, Method::xu_baseline, 0.01));
  const auto pairs = lfr::match_operating_points(results);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(*pairs[0].second.fpr, 0.08);  // |0.08-0.05| = |0.02-0.05|, higher TPR wins
  EXPECT_EQ(*pairs[1].second.fpr, 0.2);
}

TEST(Sweep, FromLightFieldMatchesRelabelledAnalysis) {
  const lfr::SceneSpec s = lfr::preset_scene("sphere_large_baseline");
  const lfr::RenderResult r = lfr::render_lightfield(s, 3);
  const lfr::PipelineConfig cfg;
  const auto kps = lfr::detect_central_keypoints(r.lf, cfg);
  lfr::ThresholdGrid grid;
  grid.planar = {0.5, cfg.thresholds.planar_thresh};
  grid.slope = {cfg.thresholds.slope_thresh};
  grid.xu = {cfg.thresholds.xu_thresh};
  const auto results = lfr::sweep_thresholds(r.lf, kps, r.truth.refr_mask, grid, cfg, 1);
  ASSERT_EQ(results.size(), 3u);
  const auto labels = lfr::analyze_features(r.lf, kps, cfg, 1);
  const auto direct = lfr::evaluate(labels, r.truth.refr_mask, Method::proposed, cfg.thresholds);
  expect_counts_eq(results[1].counts, direct.counts);
  expect_counts_eq(direct.counts, recount(labels, r.truth.refr_mask, Method::proposed, 0));
  const auto xu = lfr::evaluate(labels, r.truth.refr_mask, Method::xu_baseline, cfg.thresholds);
  expect_counts_eq(results[2].counts, xu.counts);
  expect_counts_eq(xu.counts, recount(labels, r.truth.refr_mask, Method::xu_baseline, cfg.thresholds.xu_thresh));
  EXPECT_GT(direct.counts.tp, 0);
  EXPECT_EQ(direct.counts.total(), static_cast<int>(kps.size()));
}

TEST(RefractionRatio, Counts) {
  std::vector<FeatureLabel> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(make_label(1, 1, i < 53 ? Verdict::refracted : Verdict::lambertian));
  auto r = lfr::refraction_ratio(labels);
  EXPECT_EQ(r.i_r, 53);
  EXPECT_EQ(r.i_t, 100);
  EXPECT_DOUBLE_EQ(r.r, 0.53);
  labels.push_back(make_label(1, 1, Verdict::indeterminate));
  EXPECT_EQ(lfr::refraction_ratio(labels).i_t, 100);
  for (auto& l : labels)
    if (l.verdict == Verdict::refracted) l.verdict = Verdict::lambertian;
  EXPECT_EQ(lfr::refraction_ratio(labels).r, 0.0);
  EXPECT_THROW(lfr::refraction_ratio({}), std::invalid_argument);

  std::mt19937 rng(3);
  const auto random = random_labels(rng, 500);
  int refr = 0, det = 0;
  for (const auto& l : random) {
    refr += l.verdict == Verdict::refracted;
    det += l.verdict != Verdict::indeterminate;
  }
  const auto rr = lfr::refraction_ratio(random);
  EXPECT_EQ(rr.i_r, refr);
  EXPECT_EQ(rr.i_t, det);
  EXPECT_GE(rr.r, 0.0);
  EXPECT_LE(rr.r, 1.0);
}

TEST(Report, CsvAndJson) {
  lfr::testing::TempDir dir;
  std::mt19937 rng(1);
  lfr::ThresholdGrid grid{{1.0, 2.0}, {0.05}, {1.5}};
  const auto results = lfr::sweep_labels(random_labels(rng, 50), half_mask(), grid, {});
  lfr::emit_report(results, dir / "report");
  std::ifstream csv(dir / "report.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "method,planar_thresh,slope_thresh,xu_thresh,tp,fp,tn,fn,indeterminate,tpr,fpr");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
  }
  EXPECT_EQ(rows, 3);
  std::ifstream js(dir / "report.json");
  const nlohmann::json j = nlohmann::json::parse(js);
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[2]["method"], "xu_baseline");
  EXPECT_EQ(j[0]["tp"], results[0].counts.tp);
  EXPECT_THROW(lfr::emit_report(results, dir / "missing" / "report"), lfr::IoError);

  lfr::EvalResult undefined;
  const std::string text = lfr::results_csv({undefined});
  EXPECT_NE(text.find("proposed,1.5,0.05,1.5,0,0,0,0,0,,\n"), std::string::npos);
}

TEST(Report, AnnotationColours) {
  lfr::Image central(60, 30, 0.5f);
  auto rgb = lfr::annotate_view(central, {make_label(10, 10, Verdict::lambertian), make_label(30, 10, Verdict::refracted),
                                                make_label(50, 10, Verdict::indeterminate)});
  ASSERT_EQ(rgb.width, 60);
  auto is = [](lfr::Rgb8 p, int r, int g, int b) { return p.r == r && p.g == g && p.b == b; };
  EXPECT_TRUE(is(rgb.at(10, 10), 0, 0, 255));
  EXPECT_TRUE(is(rgb.at(30, 10), 255, 0, 0));
  EXPECT_TRUE(is(rgb.at(50, 10), 128, 128, 128));
  EXPECT_TRUE(is(rgb.at(13, 10), 0, 0, 255));  // ring at radius max(3, scale)
  EXPECT_TRUE(is(rgb.at(0, 29), 128, 128, 128));  // untouched gray background
}

}  // namespace
