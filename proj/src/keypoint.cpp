#include "lfr/keypoint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "lfr/errors.hpp"

namespace lfr {

namespace {

constexpr int kMaxRefineSteps = 5;
constexpr int kImageBorder = 3;
constexpr double kAssumedInputBlur = 0.5;

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(w);
    sum += w;
  }
  for (float& w : k) w = static_cast<float>(w / sum);
  return k;
}

Image downsample_half(const Image& img) {
  Image out(std::max(1, img.width / 2), std::max(1, img.height / 2));
  for (int v = 0; v < out.height; ++v) {
    for (int u = 0; u < out.width; ++u) out.at(u, v) = img.at(2 * u, 2 * v);
  }
  return out;
}

Image subtract(const Image& a, const Image& b) {
  Image out(a.width, a.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = a.pixels[i] - b.pixels[i];
  return out;
}

struct Octave {
  std::vector<Image> gauss;
  std::vector<Image> dog;
};

bool is_extremum(const std::vector<Image>& dog, int layer, int u, int v, float threshold) {
  const float val = dog[static_cast<std::size_t>(layer)].at(u, v);
  if (std::abs(val) <= threshold) return false;
  const bool is_max = val > 0;
  for (int dl = -1; dl <= 1; ++dl) {
    const Image& d = dog[static_cast<std::size_t>(layer + dl)];
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        if (dl == 0 && dv == 0 && du == 0) continue;
        const float n = d.at(u + du, v + dv);
        if (is_max ? n >= val : n <= val) return false;
      }
    }
  }
  return true;
}

struct Refined {
  double u, v, layer, response;
};

// Quadratic refinement of a discrete extremum in (u, v, layer). Returns false
// when the extremum drifts out of the octave or fails the contrast/edge tests.
bool refine(const std::vector<Image>& dog, int intervals, int u, int v, int layer,
            const DetectorConfig& cfg, Refined& out) {
  const int w = dog[0].width;
  const int h = dog[0].height;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad;
  int step = 0;
  for (; step < kMaxRefineSteps; ++step) {
    const Image& prev = dog[static_cast<std::size_t>(layer - 1)];
    const Image& cur = dog[static_cast<std::size_t>(layer)];
    const Image& next = dog[static_cast<std::size_t>(layer + 1)];
    grad = Eigen::Vector3d(0.5 * (cur.at(u + 1, v) - cur.at(u - 1, v)),
                           0.5 * (cur.at(u, v + 1) - cur.at(u, v - 1)),
                           0.5 * (next.at(u, v) - prev.at(u, v)));
    const double c2 = 2.0 * cur.at(u, v);
    const double duu = cur.at(u + 1, v) + cur.at(u - 1, v) - c2;
    const double dvv = cur.at(u, v + 1) + cur.at(u, v - 1) - c2;
    const double dss = next.at(u, v) + prev.at(u, v) - c2;
    const double duv = 0.25 * (cur.at(u + 1, v + 1) - cur.at(u - 1, v + 1) - cur.at(u + 1, v - 1) +
                               cur.at(u - 1, v - 1));
    const double dus = 0.25 * (next.at(u + 1, v) - next.at(u - 1, v) - prev.at(u + 1, v) + prev.at(u - 1, v));
    const double dvs = 0.25 * (next.at(u, v + 1) - next.at(u, v - 1) - prev.at(u, v + 1) + prev.at(u, v - 1));
    Eigen::Matrix3d hess;
    hess << duu, duv, dus, duv, dvv, dvs, dus, dvs, dss;
    const auto lu = hess.fullPivLu();
    if (!lu.isInvertible()) return false;
    offset = -lu.solve(grad);
    if (std::abs(offset.x()) < 0.5 && std::abs(offset.y()) < 0.5 && std::abs(offset.z()) < 0.5) break;
    if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 1e3) return false;
    u += static_cast<int>(std::lround(offset.x()));
    v += static_cast<int>(std::lround(offset.y()));
    layer += static_cast<int>(std::lround(offset.z()));
    if (layer < 1 || layer > intervals || u < kImageBorder || u >= w - kImageBorder || v < kImageBorder ||
        v >= h - kImageBorder) {
      return false;
    }
  }
  if (step >= kMaxRefineSteps) return false;

  const Image& cur = dog[static_cast<std::size_t>(layer)];
  const double response = cur.at(u, v) + 0.5 * grad.dot(offset);
  if (std::abs(response) < cfg.contrast_thresh) return false;

  const double c2 = 2.0 * cur.at(u, v);
  const double duu = cur.at(u + 1, v) + cur.at(u - 1, v) - c2;
  const double dvv = cur.at(u, v + 1) + cur.at(u, v - 1) - c2;
  const double duv =
      0.25 * (cur.at(u + 1, v + 1) - cur.at(u - 1, v + 1) - cur.at(u + 1, v - 1) + cur.at(u - 1, v - 1));
  const double tr = duu + dvv;
  const double det = duu * dvv - duv * duv;
  const double r = cfg.edge_thresh;
  if (det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det) return false;

  out = Refined{u + offset.x(), v + offset.y(), layer + offset.z(), std::abs(response)};
  return true;
}

}  // namespace

Image gaussian_blur(ImageView img, double sigma) {
  Image out(img.width, img.height);
  if (sigma <= 0.0) {
    std::copy(img.pixels.begin(), img.pixels.end(), out.pixels.begin());
    return out;
  }
  const std::vector<float> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  Image tmp(img.width, img.height);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * img.at(reflect101(u + i, img.width), v);
      }
      tmp.at(u, v) = acc;
    }
  }
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * tmp.at(u, reflect101(v + i, img.height));
      }
      out.at(u, v) = acc;
    }
  }
  return out;
}

int template_side(double scale, double k_template) {
  const double raw = 2.0 * k_template * scale + 1.0;
  return 2 * static_cast<int>(std::lround((raw - 1.0) / 2.0)) + 1;
}

std::vector<Keypoint> detect_keypoints(ImageView img, const DetectorConfig& cfg) {
  if (img.width < 32 || img.height < 32) throw std::invalid_argument("image too small for detection (< 32x32)");
  if (cfg.octaves < 1 || cfg.intervals < 1 || cfg.sigma0 <= kAssumedInputBlur) {
    throw std::invalid_argument("invalid detector configuration");
  }

  const int layers = cfg.intervals + 3;
  const double k = std::pow(2.0, 1.0 / cfg.intervals);

  // Incremental blur between consecutive layers of an octave.
  std::vector<double> sig_step(static_cast<std::size_t>(layers));
  sig_step[0] = cfg.sigma0;
  for (int i = 1; i < layers; ++i) {
    const double prev = cfg.sigma0 * std::pow(k, i - 1);
    const double total = prev * k;
    sig_step[static_cast<std::size_t>(i)] = std::sqrt(total * total - prev * prev);
  }

  std::vector<Octave> pyramid;
  Image base = gaussian_blur(img, std::sqrt(cfg.sigma0 * cfg.sigma0 - kAssumedInputBlur * kAssumedInputBlur));
  for (int o = 0; o < cfg.octaves; ++o) {
    if (base.width < 2 * kImageBorder + 3 || base.height < 2 * kImageBorder + 3) break;
    Octave oct;
    oct.gauss.push_back(base);
    for (int i = 1; i < layers; ++i) {
      oct.gauss.push_back(gaussian_blur(oct.gauss.back().view(), sig_step[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i + 1 < layers; ++i) {
      oct.dog.push_back(subtract(oct.gauss[static_cast<std::size_t>(i + 1)], oct.gauss[static_cast<std::size_t>(i)]));
    }
    base = downsample_half(oct.gauss[static_cast<std::size_t>(cfg.intervals)]);
    pyramid.push_back(std::move(oct));
  }

  const float prelim = static_cast<float>(0.5 * cfg.contrast_thresh);
  std::vector<Keypoint> found;
  for (int o = 0; o < static_cast<int>(pyramid.size()); ++o) {
    const auto& dog = pyramid[static_cast<std::size_t>(o)].dog;
    const int w = dog[0].width;
    const int h = dog[0].height;
    const double octave_scale = std::ldexp(1.0, o);
    std::vector<Keypoint> octave_kps;
    for (int layer = 1; layer <= cfg.intervals; ++layer) {
      for (int v = kImageBorder; v < h - kImageBorder; ++v) {
        for (int u = kImageBorder; u < w - kImageBorder; ++u) {
          if (!is_extremum(dog, layer, u, v, prelim)) continue;
          Refined r{};
          if (!refine(dog, cfg.intervals, u, v, layer, cfg, r)) continue;
          Keypoint kp;
          kp.u0 = r.u * octave_scale;
          kp.v0 = r.v * octave_scale;
          const double sigma = cfg.sigma0 * std::pow(2.0, r.layer / cfg.intervals) * octave_scale;
          kp.scale = std::max(1.0, sigma * std::sqrt(2.0));
          kp.score = r.response;
          kp.octave = o;
          if (kp.u0 < 0.0 || kp.v0 < 0.0 || kp.u0 > img.width - 1 || kp.v0 > img.height - 1) continue;
          if (cfg.k_template > 0.0) {
            const int half = template_side(kp.scale, cfg.k_template) / 2;
            const int cu = static_cast<int>(std::lround(kp.u0));
            const int cv = static_cast<int>(std::lround(kp.v0));
            if (cu - half < 0 || cv - half < 0 || cu + half >= img.width || cv + half >= img.height) continue;
          }
          octave_kps.push_back(kp);
        }
      }
    }
    // Dedup within one pixel, keeping the strongest response.
    std::stable_sort(octave_kps.begin(), octave_kps.end(),
                     [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
    std::vector<Keypoint> kept;
    for (const Keypoint& kp : octave_kps) {
      const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Keypoint& q) {
        return std::hypot(q.u0 - kp.u0, q.v0 - kp.v0) <= 1.0;
      });
      if (!dup) kept.push_back(kp);
    }
    found.insert(found.end(), kept.begin(), kept.end());
  }

  std::sort(found.begin(), found.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.v0 != b.v0) return a.v0 < b.v0;
    if (a.u0 != b.u0) return a.u0 < b.u0;
    return a.scale < b.scale;
  });
  return found;
}

std::vector<Keypoint> load_keypoints(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoint file '" + path.string() + "'");
  std::vector<Keypoint> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Keypoint kp;
    std::string extra;
    if (!(ls >> kp.u0 >> kp.v0 >> kp.scale >> kp.score) || (ls >> extra)) {
      throw FormatError("malformed keypoint at line " + std::to_string(line_no) + ": '" + line + "'");
    }
    if (!std::isfinite(kp.u0) || !std::isfinite(kp.v0) || !std::isfinite(kp.scale) || !std::isfinite(kp.score)) {
      throw FormatError("non-finite keypoint value at line " + std::to_string(line_no));
    }
    if (kp.u0 < 0.0 || kp.v0 < 0.0 || kp.u0 >= width || kp.v0 >= height) {
      throw std::out_of_range("keypoint at line " + std::to_string(line_no) + " lies outside the " +
                              std::to_string(width) + "x" + std::to_string(height) + " image");
    }
    if (kp.scale < 1.0) throw std::out_of_range("keypoint scale < 1 at line " + std::to_string(line_no));
    out.push_back(kp);
  }
  return out;
}

void save_keypoints(const std::vector<Keypoint>& keypoints, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write keypoint file '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Keypoint& kp : keypoints) out << kp.u0 << ' ' << kp.v0 << ' ' << kp.scale << ' ' << kp.score << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace lfr
