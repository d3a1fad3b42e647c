#pragma once

#include <filesystem>
#include <vector>

#include "lfr/image.hpp"

namespace lfr {

struct Keypoint {
  double u0 = 0.0;
  double v0 = 0.0;
  double scale = 1.0;  // blob radius in pixels
  double score = 0.0;
  int octave = 0;
};

struct DetectorConfig {
  int octaves = 3;
  int intervals = 3;
  double sigma0 = 1.6;
  double contrast_thresh = 0.01;
  double edge_thresh = 10.0;
  // Keypoints whose template (side round_to_odd(2*k*scale+1)) would leave the
  // image are dropped. Zero disables the margin.
  double k_template = 5.0;
};

/// Difference-of-Gaussians blob detector (localization and scale only).
/// Output is sorted by descending score and deduplicated within 1 px per octave.
/// Throws std::invalid_argument for images smaller than 32x32.
std::vector<Keypoint> detect_keypoints(ImageView img, const DetectorConfig& cfg);

/// Parses `u v scale score` lines. Blank lines and `#` comments are skipped.
/// Throws FormatError for malformed lines and std::out_of_range for keypoints
/// outside a `width` x `height` image or with scale < 1.
std::vector<Keypoint> load_keypoints(const std::filesystem::path& path, int width, int height);

/// Writes the format read by load_keypoints, with enough digits to round-trip doubles.
void save_keypoints(const std::vector<Keypoint>& keypoints, const std::filesystem::path& path);

/// Odd template side length for a keypoint of the given scale.
int template_side(double scale, double k_template);

/// Separable Gaussian blur with reflect-101 borders.
Image gaussian_blur(ImageView img, double sigma);

}  // namespace lfr
