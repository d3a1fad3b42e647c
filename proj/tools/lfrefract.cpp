// lfrefract: render synthetic light fields, classify features as Lambertian or
// refracted, evaluate against ground truth and export filtered keypoints.

#include <iostream>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lfr/cli.hpp"
#include "lfr/config.hpp"
#include "lfr/parallel.hpp"

namespace {

using lfr::cli::ConfigSource;

// --config plus one flag per config key; flags override the file.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "JSON config file");
    for (const std::string& key : lfr::config_keys()) {
      app->add_option("--" + key, values[key], "override config key '" + key + "'");
    }
  }

  ConfigSource source(const CLI::App* app) const {
    ConfigSource src;
    if (!file.empty()) src.file = file;
    for (const auto& [key, value] : values) {
      if (app->count("--" + key) > 0) src.overrides[key] = value;
    }
    return src;
  }
};

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Refracted feature detection in 4D light fields"};
  app.set_version_flag("--version", std::string("lfrefract ") + lfr::cli::kVersion);
  app.require_subcommand(1);
  unsigned threads = lfr::default_thread_count();
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));

  lfr::cli::RenderArgs render;
  std::string render_out;
  auto* r = app.add_subcommand("render", "render a preset or scene JSON to a light-field directory");
  r->add_option("scene", render.scene, "preset name or scene JSON file")->required();
  r->add_option("out_dir", render_out, "output directory")->required();
  r->add_option("--seed", render.seed, "texture seed");

  lfr::cli::DetectArgs detect;
  std::string detect_lf, detect_out;
  ConfigFlags detect_cfg;
  auto* d = app.add_subcommand("detect", "detect central-view keypoints");
  d->add_option("lf_dir", detect_lf, "light-field directory")->required();
  d->add_option("out", detect_out, "keypoint text file")->required();
  detect_cfg.attach(d);

  lfr::cli::ClassifyArgs classify;
  std::string cl_lf, cl_kp, cl_json, cl_png, cl_curves;
  ConfigFlags classify_cfg;
  auto* c = app.add_subcommand("classify", "label features as Lambertian or refracted");
  c->add_option("lf_dir", cl_lf, "light-field directory")->required();
  c->add_option("out_json", cl_json, "classification JSON")->required();
  c->add_option("--keypoints", cl_kp, "keypoint text file (default: detect)");
  c->add_option("--png", cl_png, "annotated central view");
  c->add_option("--curves", cl_curves, "per-feature curve dump (JSON)");
  classify_cfg.attach(c);

  lfr::cli::EvalArgs eval;
  std::string ev_lf, ev_mask, ev_kp, ev_out;
  ConfigFlags eval_cfg;
  auto* e = app.add_subcommand("eval", "TPR/FPR of both methods at the configured thresholds");
  e->add_option("lf_dir", ev_lf, "light-field directory")->required();
  e->add_option("mask", ev_mask, "ground-truth mask PNG")->required();
  e->add_option("out_csv", ev_out, "result CSV")->required();
  e->add_option("--keypoints", ev_kp, "keypoint text file (default: detect)");
  e->add_option("--exclude-center", eval.exclude_center, "exclusion disc radius as a fraction of mask radius")
      ->check(CLI::Range(0.0, 1.0));
  eval_cfg.attach(e);

  lfr::cli::SweepArgs sweep;
  std::string sw_lf, sw_mask, sw_kp, sw_grid, sw_out;
  ConfigFlags sweep_cfg;
  auto* s = app.add_subcommand("sweep", "evaluate both methods over a threshold grid");
  s->add_option("lf_dir", sw_lf, "light-field directory")->required();
  s->add_option("mask", sw_mask, "ground-truth mask PNG")->required();
  s->add_option("out_csv", sw_out, "result CSV")->required();
  s->add_option("--grid", sw_grid, "grid JSON {\"planar\": [...], \"slope\": [...], \"xu\": [...]}");
  s->add_option("--keypoints", sw_kp, "keypoint text file (default: detect)");
  s->add_option("--exclude-center", sweep.exclude_center, "exclusion disc radius as a fraction of mask radius")
      ->check(CLI::Range(0.0, 1.0));
  sweep_cfg.attach(s);

  lfr::cli::ExportArgs exp;
  std::string ex_json, ex_out, ex_mode = "filtered";
  auto* x = app.add_subcommand("export", "write keypoints from a classification, optionally dropping non-Lambertian");
  x->add_option("classify_json", ex_json, "classification JSON")->required();
  x->add_option("out", ex_out, "keypoint text file")->required();
  x->add_option("--mode", ex_mode, "filtered | unfiltered")->check(CLI::IsMember({"filtered", "unfiltered"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : lfr::cli::kConfigError;
  }

  if (r->parsed()) {
    render.out_dir = render_out;
    render.threads = threads;
    return lfr::cli::cmd_render(render);
  }
  if (d->parsed()) {
    detect.lf_dir = detect_lf;
    detect.out_keypoints = detect_out;
    detect.config = detect_cfg.source(d);
    return lfr::cli::cmd_detect(detect);
  }
  if (c->parsed()) {
    classify.lf_dir = cl_lf;
    classify.out_json = cl_json;
    classify.keypoints = optional_path(cl_kp);
    classify.out_png = optional_path(cl_png);
    classify.out_curves = optional_path(cl_curves);
    classify.config = classify_cfg.source(c);
    classify.threads = threads;
    return lfr::cli::cmd_classify(classify);
  }
  if (e->parsed()) {
    eval.lf_dir = ev_lf;
    eval.mask_png = ev_mask;
    eval.out_csv = ev_out;
    eval.keypoints = optional_path(ev_kp);
    eval.config = eval_cfg.source(e);
    eval.threads = threads;
    return lfr::cli::cmd_eval(eval);
  }
  if (s->parsed()) {
    sweep.lf_dir = sw_lf;
    sweep.mask_png = sw_mask;
    sweep.out_csv = sw_out;
    sweep.keypoints = optional_path(sw_kp);
    sweep.grid = optional_path(sw_grid);
    sweep.config = sweep_cfg.source(s);
    sweep.threads = threads;
    return lfr::cli::cmd_sweep(sweep);
  }
  exp.classify_json = ex_json;
  exp.out_file = ex_out;
  exp.mode = ex_mode == "unfiltered" ? lfr::cli::ExportMode::unfiltered : lfr::cli::ExportMode::filtered;
  return lfr::cli::cmd_export_features(exp);
}
