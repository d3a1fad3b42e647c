#include "lfr/pipeline.hpp"

#include "lfr/parallel.hpp"

namespace lfr {

std::vector<Keypoint> detect_central_keypoints(const LightField& lf, const PipelineConfig& cfg) {
  DetectorConfig det = cfg.detector;
  det.k_template = cfg.curves.k_template;
  return detect_keypoints(lf.view(lf.center_s(), lf.center_t()), det);
}

std::vector<FeatureLabel> analyze_features(const LightField& lf, const std::vector<Keypoint>& keypoints,
                                           const PipelineConfig& cfg, unsigned threads,
                                           std::vector<CurvePair>* curves_out) {
  std::vector<FeatureLabel> labels(keypoints.size());
  std::vector<CurvePair> curves(keypoints.size());
  parallel_for(keypoints.size(), threads, [&](std::size_t i) {
    curves[i] = extract_feature_curves(lf, keypoints[i], cfg.curves);
    labels[i] = classify(curves[i].horizontal, curves[i].vertical, keypoints[i], cfg.thresholds);
  });
  if (curves_out) *curves_out = std::move(curves);
  return labels;
}

}  // namespace lfr
