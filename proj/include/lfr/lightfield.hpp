#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfr/image.hpp"

namespace lfr {

struct LFMetadata {
  // Metres (or scene units) per view step; absent means the grid is in plain view units.
  std::optional<double> baseline_s;
  std::optional<double> baseline_t;
  // Separation of the two reference planes. Only D / depth ratios matter for slopes.
  double plane_sep_D = 1.0;
  std::string source;
};

/// 4D grayscale light field L(s, t, u, v) sampled on an odd n_s x n_t view grid.
///
/// Views are stored t-major, s-minor; each view is row-major (v rows of n_u pixels).
/// View-grid coordinates passed to accessors are zero-based indices; the central
/// view sits at ((n_s-1)/2, (n_t-1)/2) and is the origin of signed view offsets.
/// Instances are immutable after construction.
class LightField {
 public:
  /// Validates the grid invariants (odd n_s, n_t >= 3; finite samples in [0,1]).
  /// Throws std::invalid_argument on violation.
  LightField(int n_s, int n_t, int n_u, int n_v, std::vector<float> samples, LFMetadata meta = {});

  int n_s() const { return n_s_; }
  int n_t() const { return n_t_; }
  int n_u() const { return n_u_; }
  int n_v() const { return n_v_; }
  int center_s() const { return (n_s_ - 1) / 2; }
  int center_t() const { return (n_t_ - 1) / 2; }
  const LFMetadata& meta() const { return meta_; }

  float at(int s, int t, int u, int v) const {
    return samples_[view_offset(s, t) + static_cast<std::size_t>(v) * static_cast<std::size_t>(n_u_) +
                    static_cast<std::size_t>(u)];
  }

  /// Non-owning view of image (s, t). Throws std::out_of_range for bad indices.
  ImageView view(int s, int t) const;

  std::span<const float> samples() const { return samples_; }

 private:
  std::size_t view_offset(int s, int t) const {
    return (static_cast<std::size_t>(t) * static_cast<std::size_t>(n_s_) + static_cast<std::size_t>(s)) *
           static_cast<std::size_t>(n_u_) * static_cast<std::size_t>(n_v_);
  }

  int n_s_, n_t_, n_u_, n_v_;
  std::vector<float> samples_;
  LFMetadata meta_;
};

enum class Orientation { horizontal, vertical };

const char* to_string(Orientation o);

/// Epipolar plane image: one view axis by one pixel axis.
/// Horizontal: rows are s (n_s), columns u (n_u), at fixed t* and v*.
/// Vertical: rows are t (n_t), columns v (n_v), at fixed s* and u*.
struct EPI {
  Orientation orientation = Orientation::horizontal;
  int fixed_view = 0;
  int fixed_pixel = 0;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  float at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col)];
  }
};

Image central_view(const LightField& lf);
EPI horizontal_epi(const LightField& lf, int t_star, int v_star);
EPI vertical_epi(const LightField& lf, int s_star, int u_star);

/// Reads `manifest.json` plus `view_{t}_{s}.png|pgm` images from `dir`.
/// Throws IoError if `dir` is not a readable directory and FormatError for a
/// missing or malformed manifest, bad grid dimensions, or unreadable views.
LightField load_lightfield(const std::filesystem::path& dir);

/// Writes the directory layout read by load_lightfield using 16-bit PNG views.
/// Creates `dir` if needed. Throws IoError on any filesystem failure.
void save_lightfield(const LightField& lf, const std::filesystem::path& dir);

/// Box-filter downsampling of every view by an integer factor.
LightField downsample(const LightField& lf, int factor);

}  // namespace lfr
