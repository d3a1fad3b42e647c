#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "lfr/image.hpp"
#include "lfr/lightfield.hpp"

namespace lfr {

enum class TextureKind { noise, checkerboard, image };
enum class RefractorKind { none, sphere, cylinder };
enum class Axis { vertical, horizontal };

struct BackgroundSpec {
  double z = 400.0;
  TextureKind texture = TextureKind::noise;
  double texel = 12.5;  // world units per noise cell, checker square, or image pixel
  std::string image_path;
};

struct RefractorSpec {
  RefractorKind kind = RefractorKind::none;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
  double ior = 1.5;
  Axis axis = Axis::vertical;  // cylinders only
};

/// Pinhole array on the z = 0 plane, optical axes along +z, view (s, t) at
/// (s * baseline_s, t * baseline_t, 0) with s, t signed offsets from the centre.
struct CameraSpec {
  int n_s = 9;
  int n_t = 9;
  double baseline_s = 1.0;
  double baseline_t = 1.0;
  double focal_px = 256.0;
  double cx = 127.5;
  double cy = 127.5;
  int n_u = 256;
  int n_v = 256;
};

/// Optional additive highlight on the refractor's front surface.
struct SpecularSpec {
  double strength = 0.0;
  double shininess = 60.0;
  Eigen::Vector3d light_dir = Eigen::Vector3d(0.3, -0.3, -1.0);
};

struct SceneSpec {
  std::string name;
  BackgroundSpec background;
  RefractorSpec refractor;
  CameraSpec camera;
  bool supersample = false;
  SpecularSpec specular;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const SceneSpec& spec);

nlohmann::json scene_to_json(const SceneSpec& spec);
/// Throws FormatError on missing or mistyped fields.
SceneSpec scene_from_json(const nlohmann::json& j);

/// Preset scenes: lambertian, sphere_large_baseline, sphere_small_baseline,
/// cylinder_small_baseline. Throws std::invalid_argument for unknown names.
SceneSpec preset_scene(std::string_view name);
std::vector<std::string> preset_names();

/// Slope (pixels per view) of a background point: -focal * baseline / z.
double background_slope(const SceneSpec& spec);

struct GroundTruth {
  Image refr_mask;  // 1 where the central-view chief ray meets the refractor
  Image depth_map;  // background z for Lambertian pixels, 0 elsewhere
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // unit length
};

struct TraceResult {
  bool hit_refractor = false;
  bool total_internal_reflection = false;
  bool escaped = false;  // never reached the background plane
  Eigen::Vector3d background_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d exit_dir = Eigen::Vector3d::Zero();
  double intensity = 0.0;
};

/// Deterministic ray tracer for one scene. Safe to share between threads.
class SceneRenderer {
 public:
  SceneRenderer(SceneSpec spec, std::uint64_t seed);

  const SceneSpec& spec() const { return spec_; }
  Ray chief_ray(int s_offset, int t_offset, double u, double v) const;
  TraceResult trace(const Ray& ray) const;
  double texture(double x, double y) const;
  /// First intersection distance with the refractor, if any.
  std::optional<double> refractor_hit(const Ray& ray) const;

 private:
  double value_noise(double x, double y, std::uint64_t salt) const;

  SceneSpec spec_;
  std::uint64_t seed_;
  Image texture_image_;
};

struct RenderResult {
  LightField lf;
  GroundTruth truth;
};

/// Renders every view. `threads` = 0 uses all hardware threads; output does not
/// depend on the thread count.
RenderResult render_lightfield(const SceneSpec& spec, std::uint64_t seed, unsigned threads = 0);

/// Disc (value 1) of radius fraction * sqrt(area / pi) centred on the mask
/// centroid; used to exclude the symmetric centre of a sphere from evaluation.
Image central_exclusion_disc(const Image& refr_mask, double fraction);

}  // namespace lfr
