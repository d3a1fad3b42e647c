#pragma once

#include <vector>

#include "lfr/config.hpp"
#include "lfr/curves.hpp"
#include "lfr/fit.hpp"
#include "lfr/keypoint.hpp"
#include "lfr/lightfield.hpp"

namespace lfr {

/// Keypoints of the central view with the configured detector.
std::vector<Keypoint> detect_central_keypoints(const LightField& lf, const PipelineConfig& cfg);

/// Curves and labels for every keypoint, computed concurrently over keypoints.
/// Output order matches `keypoints` and is independent of `threads`.
std::vector<FeatureLabel> analyze_features(const LightField& lf, const std::vector<Keypoint>& keypoints,
                                           const PipelineConfig& cfg, unsigned threads = 0,
                                           std::vector<CurvePair>* curves_out = nullptr);

}  // namespace lfr
