#include "lfr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"
#include "lfr/parallel.hpp"
#include "lfr/png_io.hpp"

namespace lfr {

using Eigen::Vector3d;
using nlohmann::json;

namespace {

constexpr double kRayEps = 1e-9;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double quintic(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Snell refraction. `n` faces the incoming ray; eta = n_from / n_to.
// Returns false on total internal reflection.
bool refract(const Vector3d& d, const Vector3d& n, double eta, Vector3d& out) {
  const double cos_i = -n.dot(d);
  const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
  if (k < 0.0) return false;
  out = (eta * d + (eta * cos_i - std::sqrt(k)) * n).normalized();
  return true;
}

// Both roots of the ray/primitive quadratic, or nothing if the ray misses.
std::optional<std::pair<double, double>> intersect(const RefractorSpec& r, const Ray& ray) {
  Vector3d oc = ray.origin - r.center;
  Vector3d d = ray.dir;
  if (r.kind == RefractorKind::cylinder) {
    // Drop the component along the cylinder axis.
    const int axis = r.axis == Axis::vertical ? 1 : 0;
    oc[axis] = 0.0;
    d[axis] = 0.0;
  }
  const double a = d.squaredNorm();
  if (a < 1e-300) return std::nullopt;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - r.radius * r.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable root pair.
  const double q = -(b + std::copysign(sq, b));
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  return std::make_pair(t0, t1);
}

Vector3d outward_normal(const RefractorSpec& r, const Vector3d& p) {
  Vector3d n = p - r.center;
  if (r.kind == RefractorKind::cylinder) n[r.axis == Axis::vertical ? 1 : 0] = 0.0;
  return n.normalized();
}

const char* texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::noise:
      return "noise";
    case TextureKind::checkerboard:
      return "checkerboard";
    case TextureKind::image:
      return "image";
  }
  return "noise";
}

json vec_json(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vector3d vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-element array");
  return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void validate(const SceneSpec& spec) {
  const CameraSpec& c = spec.camera;
  if (c.n_s < 3 || c.n_t < 3 || c.n_s % 2 == 0 || c.n_t % 2 == 0) {
    throw std::invalid_argument("camera grid must be odd and at least 3x3");
  }
  if (c.n_u < 1 || c.n_v < 1) throw std::invalid_argument("view resolution must be positive");
  if (!(c.baseline_s > 0.0) || !(c.baseline_t > 0.0)) throw std::invalid_argument("baselines must be positive");
  if (!(c.focal_px > 0.0)) throw std::invalid_argument("focal length must be positive");
  if (!(spec.background.z > 0.0)) throw std::invalid_argument("background must lie in front of the cameras");
  if (!(spec.background.texel > 0.0)) throw std::invalid_argument("texel size must be positive");
  if (spec.background.texture == TextureKind::image && spec.background.image_path.empty()) {
    throw std::invalid_argument("image texture needs image_path");
  }
  const RefractorSpec& r = spec.refractor;
  if (r.kind != RefractorKind::none) {
    if (!(r.radius > 0.0)) throw std::invalid_argument("refractor radius must be positive");
    if (!(r.ior > 1.0)) throw std::invalid_argument("refractor ior must exceed 1");
    if (!(spec.background.z > r.center.z() + r.radius)) {
      throw std::invalid_argument("background must lie behind the refractor");
    }
    if (!(r.center.z() - r.radius > 0.0)) throw std::invalid_argument("refractor must lie in front of the cameras");
  }
}

json scene_to_json(const SceneSpec& spec) {
  json refr;
  switch (spec.refractor.kind) {
    case RefractorKind::none:
      refr = {{"kind", "none"}};
      break;
    case RefractorKind::sphere:
      refr = {{"kind", "sphere"},
              {"center", vec_json(spec.refractor.center)},
              {"radius", spec.refractor.radius},
              {"ior", spec.refractor.ior}};
      break;
    case RefractorKind::cylinder:
      refr = {{"kind", "cylinder"},
              {"axis", spec.refractor.axis == Axis::vertical ? "vertical" : "horizontal"},
              {"center", vec_json(spec.refractor.center)},
              {"radius", spec.refractor.radius},
              {"ior", spec.refractor.ior}};
      break;
  }
  const CameraSpec& c = spec.camera;
  return json{{"name", spec.name},
              {"background",
               {{"z", spec.background.z},
                {"texture", texture_name(spec.background.texture)},
                {"texel", spec.background.texel},
                {"image_path", spec.background.image_path}}},
              {"refractor", refr},
              {"camera",
               {{"n_s", c.n_s},
                {"n_t", c.n_t},
                {"baseline_s", c.baseline_s},
                {"baseline_t", c.baseline_t},
                {"focal_px", c.focal_px},
                {"cx", c.cx},
                {"cy", c.cy},
                {"n_u", c.n_u},
                {"n_v", c.n_v}}},
              {"supersample", spec.supersample},
              {"specular",
               {{"strength", spec.specular.strength},
                {"shininess", spec.specular.shininess},
                {"light_dir", vec_json(spec.specular.light_dir)}}}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec spec;
  try {
    spec.name = j.value("name", std::string{});
    const json& bg = j.at("background");
    spec.background.z = bg.at("z").get<double>();
    const std::string tex = bg.value("texture", std::string("noise"));
    if (tex == "noise") {
      spec.background.texture = TextureKind::noise;
    } else if (tex == "checkerboard") {
      spec.background.texture = TextureKind::checkerboard;
    } else if (tex == "image") {
      spec.background.texture = TextureKind::image;
    } else {
      throw FormatError("unknown texture '" + tex + "'");
    }
    spec.background.texel = bg.value("texel", spec.background.texel);
    spec.background.image_path = bg.value("image_path", std::string{});

    const json& r = j.at("refractor");
    const std::string kind = r.at("kind").get<std::string>();
    if (kind == "none") {
      spec.refractor.kind = RefractorKind::none;
    } else if (kind == "sphere" || kind == "cylinder") {
      spec.refractor.kind = kind == "sphere" ? RefractorKind::sphere : RefractorKind::cylinder;
      spec.refractor.center = vec_from(r.at("center"));
      spec.refractor.radius = r.at("radius").get<double>();
      spec.refractor.ior = r.at("ior").get<double>();
      if (kind == "cylinder") {
        const std::string axis = r.value("axis", std::string("vertical"));
        if (axis != "vertical" && axis != "horizontal") throw FormatError("unknown cylinder axis '" + axis + "'");
        spec.refractor.axis = axis == "vertical" ? Axis::vertical : Axis::horizontal;
      }
    } else {
      throw FormatError("unknown refractor kind '" + kind + "'");
    }

    const json& c = j.at("camera");
    spec.camera.n_s = c.at("n_s").get<int>();
    spec.camera.n_t = c.at("n_t").get<int>();
    spec.camera.baseline_s = c.at("baseline_s").get<double>();
    spec.camera.baseline_t = c.at("baseline_t").get<double>();
    spec.camera.focal_px = c.at("focal_px").get<double>();
    spec.camera.n_u = c.at("n_u").get<int>();
    spec.camera.n_v = c.at("n_v").get<int>();
    spec.camera.cx = c.value("cx", (spec.camera.n_u - 1) / 2.0);
    spec.camera.cy = c.value("cy", (spec.camera.n_v - 1) / 2.0);

    spec.supersample = j.value("supersample", false);
    if (j.contains("specular")) {
      const json& sp = j["specular"];
      spec.specular.strength = sp.value("strength", 0.0);
      spec.specular.shininess = sp.value("shininess", spec.specular.shininess);
      if (sp.contains("light_dir")) spec.specular.light_dir = vec_from(sp["light_dir"]);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed scene: ") + e.what());
  }
  return spec;
}

// Geometry shared by the presets (scene units are millimetres). Background
// texture is scaled so one noise cell spans 8 px in the central view.
namespace {

constexpr double kUnitPerViewLarge = 16.1;
constexpr double kUnitPerViewSmall = 3.7;
constexpr double kBaselineScale = 0.1;
constexpr double kFocal = 256.0;
constexpr double kCharacteristicPx = 8.0;

SceneSpec base_scene(const std::string& name, double unit_per_view, double z_bg) {
  SceneSpec s;
  s.name = name;
  s.camera.baseline_s = s.camera.baseline_t = unit_per_view * kBaselineScale;
  s.camera.focal_px = kFocal;
  s.background.z = z_bg;
  s.background.texel = kCharacteristicPx * z_bg / kFocal;
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"lambertian", "sphere_large_baseline", "sphere_small_baseline", "cylinder_small_baseline"};
}

SceneSpec preset_scene(std::string_view name) {
  if (name == "lambertian") return base_scene("lambertian", kUnitPerViewLarge, 400.0);
  // Refractors sit well in front of a distant background, so each forms a real,
  // inverted image between itself and the cameras.
  if (name == "sphere_large_baseline" || name == "sphere_small_baseline") {
    const bool large = name == "sphere_large_baseline";
    SceneSpec s = base_scene(std::string(name), large ? kUnitPerViewLarge : kUnitPerViewSmall, 1200.0);
    s.refractor = {RefractorKind::sphere, Vector3d(0.0, 0.0, 300.0), 80.0, 1.5, Axis::vertical};
    return s;
  }
  if (name == "cylinder_small_baseline") {
    SceneSpec s = base_scene("cylinder_small_baseline", kUnitPerViewSmall, 1200.0);
    s.refractor = {RefractorKind::cylinder, Vector3d(0.0, 0.0, 300.0), 60.0, 1.49, Axis::vertical};
    return s;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

double background_slope(const SceneSpec& spec) {
  return -spec.camera.focal_px * spec.camera.baseline_s / spec.background.z;
}

SceneRenderer::SceneRenderer(SceneSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  validate(spec_);
  if (spec_.background.texture == TextureKind::image) {
    texture_image_ = read_gray_image(spec_.background.image_path);
  }
}

double SceneRenderer::value_noise(double x, double y, std::uint64_t salt) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = quintic(x - fx);
  const double ty = quintic(y - fy);
  const std::uint64_t s = seed_ ^ salt;
  const double v00 = lattice_value(ix, iy, s);
  const double v10 = lattice_value(ix + 1, iy, s);
  const double v01 = lattice_value(ix, iy + 1, s);
  const double v11 = lattice_value(ix + 1, iy + 1, s);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

double SceneRenderer::texture(double x, double y) const {
  const double texel = spec_.background.texel;
  switch (spec_.background.texture) {
    case TextureKind::noise: {
      const double coarse = value_noise(x / texel, y / texel, 0x51ed2701ULL);
      const double fine = value_noise(2.0 * x / texel, 2.0 * y / texel, 0xa3b195ULL);
      return 0.1 + 0.8 * (coarse + 0.5 * fine) / 1.5;
    }
    case TextureKind::checkerboard: {
      const auto cx = static_cast<std::int64_t>(std::floor(x / texel));
      const auto cy = static_cast<std::int64_t>(std::floor(y / texel));
      return ((cx + cy) & 1) != 0 ? 0.8 : 0.2;
    }
    case TextureKind::image: {
      const int w = texture_image_.width;
      const int h = texture_image_.height;
      const double px = x / texel;
      const double py = y / texel;
      const double fx = std::floor(px), fy = std::floor(py);
      auto wrap = [](std::int64_t i, int n) { return static_cast<int>(((i % n) + n) % n); };
      const auto ix = static_cast<std::int64_t>(fx);
      const auto iy = static_cast<std::int64_t>(fy);
      const double ax = px - fx, ay = py - fy;
      const double v00 = texture_image_.at(wrap(ix, w), wrap(iy, h));
      const double v10 = texture_image_.at(wrap(ix + 1, w), wrap(iy, h));
      const double v01 = texture_image_.at(wrap(ix, w), wrap(iy + 1, h));
      const double v11 = texture_image_.at(wrap(ix + 1, w), wrap(iy + 1, h));
      return (v00 * (1 - ax) + v10 * ax) * (1 - ay) + (v01 * (1 - ax) + v11 * ax) * ay;
    }
  }
  return 0.0;
}

Ray SceneRenderer::chief_ray(int s_offset, int t_offset, double u, double v) const {
  const CameraSpec& c = spec_.camera;
  Ray ray;
  ray.origin = Vector3d(s_offset * c.baseline_s, t_offset * c.baseline_t, 0.0);
  ray.dir = Vector3d((u - c.cx) / c.focal_px, (v - c.cy) / c.focal_px, 1.0).normalized();
  return ray;
}

std::optional<double> SceneRenderer::refractor_hit(const Ray& ray) const {
  if (spec_.refractor.kind == RefractorKind::none) return std::nullopt;
  const auto roots = intersect(spec_.refractor, ray);
  if (!roots) return std::nullopt;
  if (roots->first > kRayEps) return roots->first;
  if (roots->second > kRayEps) return roots->second;
  return std::nullopt;
}

TraceResult SceneRenderer::trace(const Ray& ray) const {
  TraceResult result;
  Ray current = ray;
  const RefractorSpec& r = spec_.refractor;
  double highlight = 0.0;

  if (const auto t_in = refractor_hit(ray)) {
    result.hit_refractor = true;
    const Vector3d p1 = ray.origin + *t_in * ray.dir;
    const Vector3d n1 = outward_normal(r, p1);
    if (spec_.specular.strength > 0.0) {
      const Vector3d reflected = ray.dir - 2.0 * ray.dir.dot(n1) * n1;
      const double cos_h = std::max(0.0, reflected.dot(-spec_.specular.light_dir.normalized()));
      highlight = spec_.specular.strength * std::pow(cos_h, spec_.specular.shininess);
    }
    Vector3d inside;
    refract(ray.dir, n1, 1.0 / r.ior, inside);  // entering a denser medium never reflects totally
    const Ray internal{p1, inside};
    const auto roots = intersect(r, internal);
    const double t_out = roots ? roots->second : 0.0;
    const Vector3d p2 = p1 + t_out * inside;
    const Vector3d n2 = outward_normal(r, p2);
    Vector3d outside;
    if (!refract(inside, -n2, r.ior, outside)) {
      result.total_internal_reflection = true;
      result.intensity = std::clamp(highlight, 0.0, 1.0);
      return result;
    }
    current = Ray{p2, outside};
  }

  result.exit_dir = current.dir;
  if (current.dir.z() <= 0.0) {
    result.escaped = true;
    result.intensity = std::clamp(highlight, 0.0, 1.0);
    return result;
  }
  const double t_bg = (spec_.background.z - current.origin.z()) / current.dir.z();
  result.background_point = current.origin + t_bg * current.dir;
  result.intensity =
      std::clamp(texture(result.background_point.x(), result.background_point.y()) + highlight, 0.0, 1.0);
  return result;
}

RenderResult render_lightfield(const SceneSpec& spec, std::uint64_t seed, unsigned threads) {
  const SceneRenderer renderer(spec, seed);
  const CameraSpec& c = spec.camera;
  const int cs = (c.n_s - 1) / 2;
  const int ct = (c.n_t - 1) / 2;
  const std::size_t view_size = static_cast<std::size_t>(c.n_u) * static_cast<std::size_t>(c.n_v);
  std::vector<float> samples(view_size * static_cast<std::size_t>(c.n_s) * static_cast<std::size_t>(c.n_t));

  const std::size_t scanlines = static_cast<std::size_t>(c.n_s) * static_cast<std::size_t>(c.n_t) *
                                static_cast<std::size_t>(c.n_v);
  parallel_for(scanlines, threads, [&](std::size_t job) {
    const int v = static_cast<int>(job % static_cast<std::size_t>(c.n_v));
    const std::size_t view = job / static_cast<std::size_t>(c.n_v);
    const int s = static_cast<int>(view % static_cast<std::size_t>(c.n_s));
    const int t = static_cast<int>(view / static_cast<std::size_t>(c.n_s));
    float* row = samples.data() + view * view_size + static_cast<std::size_t>(v) * static_cast<std::size_t>(c.n_u);
    for (int u = 0; u < c.n_u; ++u) {
      double value = 0.0;
      if (spec.supersample) {
        for (double dv : {-0.25, 0.25}) {
          for (double du : {-0.25, 0.25}) value += renderer.trace(renderer.chief_ray(s - cs, t - ct, u + du, v + dv)).intensity;
        }
        value *= 0.25;
      } else {
        value = renderer.trace(renderer.chief_ray(s - cs, t - ct, u, v)).intensity;
      }
      // Quantized to the 16-bit levels of the on-disk format so that a saved
      // light field reloads bit-identically.
      row[u] = static_cast<float>(static_cast<double>(std::lround(std::clamp(value, 0.0, 1.0) * 65535.0)) / 65535.0);
    }
  });

  GroundTruth truth{Image(c.n_u, c.n_v), Image(c.n_u, c.n_v)};
  for (int v = 0; v < c.n_v; ++v) {
    for (int u = 0; u < c.n_u; ++u) {
      const Ray ray = renderer.chief_ray(0, 0, u, v);
      const TraceResult tr = renderer.trace(ray);
      truth.refr_mask.at(u, v) = tr.hit_refractor ? 1.0f : 0.0f;
      truth.depth_map.at(u, v) = tr.hit_refractor || tr.escaped ? 0.0f : static_cast<float>(spec.background.z);
    }
  }

  LFMetadata meta;
  meta.baseline_s = c.baseline_s;
  meta.baseline_t = c.baseline_t;
  meta.plane_sep_D = c.focal_px * c.baseline_s;
  meta.source = "synthetic:" + (spec.name.empty() ? std::string("scene") : spec.name) + " seed=" + std::to_string(seed);
  return RenderResult{LightField(c.n_s, c.n_t, c.n_u, c.n_v, std::move(samples), std::move(meta)), std::move(truth)};
}

Image central_exclusion_disc(const Image& refr_mask, double fraction) {
  Image out(refr_mask.width, refr_mask.height);
  double area = 0.0, su = 0.0, sv = 0.0;
  for (int v = 0; v < refr_mask.height; ++v) {
    for (int u = 0; u < refr_mask.width; ++u) {
      if (refr_mask.at(u, v) > 0.5f) {
        area += 1.0;
        su += u;
        sv += v;
      }
    }
  }
  if (area == 0.0) return out;
  const double cu = su / area, cv = sv / area;
  const double radius = fraction * std::sqrt(area / M_PI);
  for (int v = 0; v < out.height; ++v) {
    for (int u = 0; u < out.width; ++u) {
      if (std::hypot(u - cu, v - cv) <= radius) out.at(u, v) = 1.0f;
    }
  }
  return out;
}

}  // namespace lfr
