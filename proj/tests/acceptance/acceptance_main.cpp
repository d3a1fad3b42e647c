// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lfr/cli.hpp"
#include "lfr/curves.hpp"
#include "lfr/eval.hpp"
#include "lfr/fit.hpp"
#include "lfr/keypoint.hpp"
#include "lfr/pipeline.hpp"
#include "lfr/synth.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SceneRun {
  lfr::RenderResult render;
  std::vector<lfr::Keypoint> keypoints;
  std::vector<lfr::FeatureLabel> labels;
  std::vector<lfr::CurvePair> curves;
};

SceneRun run_scene(const lfr::SceneSpec& spec, unsigned threads) {
  const lfr::PipelineConfig cfg;
  SceneRun r{lfr::render_lightfield(spec, kSeed, threads), {}, {}, {}};
  r.keypoints = lfr::detect_central_keypoints(r.render.lf, cfg);
  r.labels = lfr::analyze_features(r.render.lf, r.keypoints, cfg, threads, &r.curves);
  return r;
}

double tpr_or_zero(const std::optional<lfr::EvalResult>& r) { return r ? r->tpr.value_or(0.0) : 0.0; }

struct Best {
  double proposed = 0.0;
  double xu = 0.0;
  double proposed_fpr = 0.0;
  double xu_fpr = 0.0;
};

Best best_at(const std::vector<lfr::EvalResult>& results, double max_fpr) {
  const auto p = lfr::best_tpr_at_fpr(results, lfr::Method::proposed, max_fpr);
  const auto x = lfr::best_tpr_at_fpr(results, lfr::Method::xu_baseline, max_fpr);
  return {tpr_or_zero(p), tpr_or_zero(x), p ? *p->fpr : 0.0, x ? *x->fpr : 0.0};
}

std::vector<lfr::EvalResult> sweep(const SceneRun& run, const lfr::Image* exclusion = nullptr) {
  return lfr::sweep_labels(run.labels, run.render.truth.refr_mask, lfr::default_threshold_grid(), lfr::Thresholds{},
                           exclusion);
}

Outcome lambertian_fidelity() {
  const lfr::SceneSpec spec = lfr::preset_scene("lambertian");
  const auto t0 = std::chrono::steady_clock::now();
  const SceneRun run = run_scene(spec, 1);
  const double elapsed = seconds_since(t0);
  const lfr::EvalResult e =
      lfr::evaluate(run.labels, run.render.truth.refr_mask, lfr::Method::proposed, lfr::Thresholds{});
  double sum = 0.0;
  int n = 0;
  for (const auto& l : run.labels) {
    if (l.verdict == lfr::Verdict::indeterminate) continue;
    sum += l.slopes.w_su + l.slopes.w_tv;
    n += 2;
  }
  const double expected = lfr::background_slope(spec);
  const double mean = n > 0 ? sum / n : 0.0;
  const double rel = std::abs(mean - expected) / std::abs(expected);
  const double fpr = e.fpr.value_or(1.0);
  const bool pass = run.keypoints.size() >= 100 && fpr <= 0.05 && rel <= 0.02 && elapsed <= 60.0;
  return {pass, fmt("keypoints %zu, FPR %.4f, mean slope %.5f vs %.5f (%.2f%%), %.1f s single-threaded",
                    run.keypoints.size(), fpr, mean, expected, 100.0 * rel, elapsed)};
}

Outcome cylinder_separation() {
  const SceneRun run = run_scene(lfr::preset_scene("cylinder_small_baseline"), 0);
  const Best b = best_at(sweep(run), 0.10);
  const bool pass = b.proposed > 0.0 && b.proposed >= 4.0 * b.xu;
  return {pass, fmt("best TPR at FPR<=10%%: proposed %.3f (FPR %.3f), xu %.3f (FPR %.3f)", b.proposed,
                    b.proposed_fpr, b.xu, b.xu_fpr)};
}

Outcome sphere_separation() {
  const SceneRun run = run_scene(lfr::preset_scene("sphere_small_baseline"), 0);
  const lfr::Image disc = lfr::central_exclusion_disc(run.render.truth.refr_mask, 0.10);
  const Best b = best_at(sweep(run, &disc), 0.10);
  const bool pass = b.proposed > 0.0 && b.proposed >= 1.5 * b.xu;
  return {pass, fmt("best TPR at FPR<=10%% (centre disc excluded): proposed %.3f (FPR %.3f), xu %.3f (FPR %.3f)",
                    b.proposed, b.proposed_fpr, b.xu, b.xu_fpr)};
}

Outcome baseline_sensitivity() {
  const SceneRun large = run_scene(lfr::preset_scene("sphere_large_baseline"), 0);
  const SceneRun small = run_scene(lfr::preset_scene("sphere_small_baseline"), 0);
  const Best bl = best_at(sweep(large), 0.10), bs = best_at(sweep(small), 0.10);
  const Best bl5 = best_at(sweep(large), 0.05), bs5 = best_at(sweep(small), 0.05);
  return {bl.proposed > bs.proposed,
          fmt("proposed TPR at FPR<=10%%: large %.3f vs small %.3f (at FPR<=5%%: %.3f vs %.3f)", bl.proposed,
              bs.proposed, bl5.proposed, bs5.proposed)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> rows_dist(4, 20);
  int violations = 0;
  double worst_eig = 0.0;
  for (int m = 0; m < 1000; ++m) {
    lfr::DesignMatrix a(rows_dist(rng), 4);
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = gauss(rng);
    const lfr::PlaneFit p = lfr::fit_plane(a);
    const lfr::HyperplaneFit h = lfr::fit_hyperplane_xu(a);
    const double scale = a.squaredNorm();
    const double tol = 1e-9 * std::sqrt(scale);
    if (!(h.e_min <= p.e1 + tol && p.e1 <= p.e2 + tol)) ++violations;

    // Independent oracle: the two smallest eigenvalues of A^T A.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(a.transpose() * a);
    const double best = eig.eigenvalues()(0) + eig.eigenvalues()(1);
    const double fit = p.e1 * p.e1 + p.e2 * p.e2;
    worst_eig = std::max(worst_eig, std::abs(fit - best) / scale);
    if (std::abs(fit - best) > 1e-9 * scale) ++violations;
    const double residual =
        (a * p.n_h).squaredNorm() + (a * p.n_v).squaredNorm();  // the fitted normals realise e1^2 + e2^2
    if (std::abs(residual - fit) > 1e-9 * scale) ++violations;

    for (int k = 0; k < 1000; ++k) {
      Eigen::Matrix<double, 4, 2> g;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) g(i, j) = gauss(rng);
      const Eigen::Matrix<double, 4, 2> q = Eigen::HouseholderQR<Eigen::Matrix<double, 4, 2>>(g).householderQ() *
                                            Eigen::Matrix<double, 4, 2>::Identity();
      if ((a * q).squaredNorm() < fit - 1e-9 * scale) ++violations;
    }
  }
  return {violations == 0, fmt("1000 matrices x 1000 subspaces, %d violations, worst eigen mismatch %.2e", violations,
                               worst_eig)};
}

// Sum of random plane waves with periods of at least 9 px.
struct BandLimited {
  std::vector<std::array<double, 4>> waves;  // amplitude, kx, ky, phase
  explicit BandLimited(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), freq(0.08, 0.65), amp(0.03, 0.1);
    for (int i = 0; i < 6; ++i) {
      const double th = angle(rng), f = freq(rng);
      waves.push_back({amp(rng), f * std::cos(th), f * std::sin(th), angle(rng)});
    }
  }
  double operator()(double x, double y) const {
    double v = 0.5;
    for (const auto& w : waves) v += w[0] * std::sin(w[1] * x + w[2] * y + w[3]);
    return v;
  }
};

lfr::LightField translating_lf(const BandLimited& tex, int n, int size, double w) {
  std::vector<float> samples;
  const int c = n / 2;
  for (int t = 0; t < n; ++t)
    for (int s = 0; s < n; ++s)
      for (int v = 0; v < size; ++v)
        for (int u = 0; u < size; ++u) samples.push_back(static_cast<float>(tex(u - w * (s - c), v - w * (t - c))));
  return lfr::LightField(n, n, size, size, std::move(samples));
}

Outcome wncc_correctness() {
  double affine_err = 0.0, self_err = 0.0, integer_err = 0.0, subpixel_err = 0.0;
  int curves = 0, invalid = 0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> gain(0.2, 3.0), offset(-1.0, 1.0), pos(40.0, 56.0), scale(1.2, 2.6);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const BandLimited tex(seed);
    lfr::Image img(96, 96), aff(96, 96);
    const double a = gain(rng), b = offset(rng);
    for (int v = 0; v < 96; ++v)
      for (int u = 0; u < 96; ++u) {
        img.at(u, v) = static_cast<float>(tex(u, v));
        aff.at(u, v) = static_cast<float>(a * tex(u, v) + b);
      }
    for (int k = 0; k < 4; ++k) {
      const lfr::Keypoint kp{pos(rng), pos(rng), scale(rng), 0, 0};
      const lfr::Template t = lfr::build_template(img.view(), kp, 5.0);
      const lfr::ScoreMap s1 = lfr::wncc(t, img.view(), t.center_u, t.center_v, 6, 6);
      const lfr::ScoreMap s2 = lfr::wncc(t, aff.view(), t.center_u, t.center_v, 6, 6);
      for (std::size_t i = 0; i < s1.scores.size(); ++i) affine_err = std::max(affine_err, std::abs(s1.scores[i] - s2.scores[i]));
      self_err = std::max(self_err, std::abs(s1.at(0, 0) - 1.0));
    }
    for (double w : {-2.0, -1.0, 1.0, 2.0, 0.31, -0.74, 1.43, -1.66}) {
      const lfr::LightField lf = translating_lf(tex, 9, 112, w);
      for (int k = 0; k < 3; ++k) {
        const lfr::Keypoint kp{pos(rng), pos(rng), scale(rng), 0, 0};
        const lfr::CurvePair p = lfr::extract_feature_curves(lf, kp, lfr::CurveConfig{});
        for (const lfr::FeatureCurve* c : {&p.horizontal, &p.vertical}) {
          ++curves;
          if (!c->valid) {
            ++invalid;
            continue;
          }
          const double c0 = c->center_pos();
          double& worst = w == std::round(w) ? integer_err : subpixel_err;
          for (const auto& smp : c->samples) worst = std::max(worst, std::abs(smp.pixel_pos - c0 - w * smp.view_offset));
        }
      }
    }
  }
  const bool pass = affine_err <= 1e-6 && self_err <= 1e-6 && integer_err == 0.0 && subpixel_err <= 0.25 && invalid == 0;
  return {pass, fmt("affine %.1e, self %.1e, integer shift %.1e, subpixel %.3f px, invalid curves %d of %d", affine_err,
                    self_err, integer_err, subpixel_err, invalid, curves)};
}

double line_fit(const lfr::FeatureCurve& c, double& rms) {
  const double n = static_cast<double>(c.samples.size());
  double sk = 0, sp = 0, skk = 0, skp = 0;
  for (const auto& s : c.samples) {
    sk += s.view_offset;
    sp += s.pixel_pos;
    skk += s.view_offset * s.view_offset;
    skp += s.view_offset * s.pixel_pos;
  }
  const double w = (n * skp - sk * sp) / (n * skk - sk * sk);
  const double b = (sp - w * sk) / n;
  double e = 0;
  for (const auto& s : c.samples) e += std::pow(s.pixel_pos - b - w * s.view_offset, 2);
  rms = std::sqrt(e / n);
  return w;
}

Outcome curve_extraction() {
  lfr::SceneSpec large = lfr::preset_scene("lambertian");
  lfr::SceneSpec small = large;
  small.camera.baseline_s = small.camera.baseline_t = lfr::preset_scene("sphere_small_baseline").camera.baseline_s;
  double worst_rms = 0.0, worst_slope = 0.0;
  int valid = 0;
  for (const lfr::SceneSpec* spec : {&large, &small}) {
    const SceneRun run = run_scene(*spec, 0);
    const double truth = lfr::background_slope(*spec);
    for (const auto& pair : run.curves) {
      for (const lfr::FeatureCurve* c : {&pair.horizontal, &pair.vertical}) {
        if (!c->valid) continue;
        ++valid;
        double rms = 0.0;
        const double w = line_fit(*c, rms);
        worst_rms = std::max(worst_rms, rms);
        worst_slope = std::max(worst_slope, std::abs(w - truth));
      }
    }
  }
  return {valid > 0 && worst_rms <= 0.25 && worst_slope <= 0.1,
          fmt("%d curves, worst RMS %.3f px, worst slope error %.4f px/view", valid, worst_rms, worst_slope)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome export_contract() {
  lfr::testing::TempDir dir;
  if (lfr::cli::cmd_render({"sphere_large_baseline", dir / "lf", kSeed, 0}) != 0) return {false, "render failed"};
  lfr::cli::ClassifyArgs c;
  c.lf_dir = dir / "lf";
  c.out_json = dir / "labels.json";
  if (lfr::cli::cmd_classify(c) != 0) return {false, "classify failed"};
  if (lfr::cli::cmd_export_features({c.out_json, lfr::cli::ExportMode::filtered, dir / "kept.txt"}) != 0)
    return {false, "export failed"};
  const json doc = json::parse(slurp(c.out_json));
  std::vector<std::pair<double, double>> lambertian, refracted;
  for (const json& f : doc["features"]) {
    const auto key = std::make_pair(f["u0"].get<double>(), f["v0"].get<double>());
    if (f["verdict"] == "lambertian") lambertian.push_back(key);
    if (f["verdict"] == "refracted") refracted.push_back(key);
  }
  const auto kept = lfr::load_keypoints(dir / "kept.txt", 256, 256);
  std::vector<std::pair<double, double>> exported;
  for (const auto& kp : kept) exported.emplace_back(kp.u0, kp.v0);
  std::ranges::sort(lambertian);
  std::ranges::sort(exported);
  int leaked = 0;
  for (const auto& r : refracted) leaked += std::ranges::binary_search(exported, r);
  const bool pass = !refracted.empty() && leaked == 0 && exported == lambertian;
  return {pass, fmt("%zu lambertian, %zu refracted; exported %zu, refracted kept %d", lambertian.size(),
                    refracted.size(), exported.size(), leaked)};
}

Outcome determinism() {
  lfr::testing::TempDir dir;
  for (const auto& [run, threads] : {std::pair{"a", 1u}, std::pair{"b", 4u}}) {
    const fs::path root = dir / run;
    if (lfr::cli::cmd_render({"cylinder_small_baseline", root / "lf", kSeed, threads}) != 0) return {false, "render failed"};
    lfr::cli::ClassifyArgs c;
    c.lf_dir = root / "lf";
    c.out_json = root / "labels.json";
    c.out_png = root / "labels.png";
    c.out_curves = root / "curves.json";
    c.threads = threads;
    lfr::cli::EvalArgs e;
    e.lf_dir = c.lf_dir;
    e.mask_png = root / "lf" / "ground_truth.png";
    e.out_csv = root / "eval.csv";
    e.threads = threads;
    if (lfr::cli::cmd_classify(c) != 0 || lfr::cli::cmd_eval(e) != 0 ||
        lfr::cli::cmd_export_features({c.out_json, lfr::cli::ExportMode::filtered, root / "kept.txt"}) != 0)
      return {false, "pipeline failed"};
  }
  int files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    differing += slurp(entry.path()) != slurp(dir / "b" / fs::relative(entry.path(), dir / "a"));
  }
  return {files > 0 && differing == 0, fmt("%d files compared across 1- and 4-thread runs, %d differ", files, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"lambertian fidelity", lambertian_fidelity},
      {"cylinder: proposed >= 4x baseline", cylinder_separation},
      {"sphere: proposed >= 1.5x baseline", sphere_separation},
      {"large baseline beats small baseline", baseline_sensitivity},
      {"plane fit oracle equivalence", oracle_equivalence},
      {"WNCC correctness", wncc_correctness},
      {"Lambertian curve extraction", curve_extraction},
      {"filtered export recount", export_contract},
      {"byte-identical pipeline", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
