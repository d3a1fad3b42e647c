#include "lfr/lightfield.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"
#include "lfr/png_io.hpp"

namespace lfr {

namespace fs = std::filesystem;
using nlohmann::json;

LightField::LightField(int n_s, int n_t, int n_u, int n_v, std::vector<float> samples, LFMetadata meta)
    : n_s_(n_s), n_t_(n_t), n_u_(n_u), n_v_(n_v), samples_(std::move(samples)), meta_(std::move(meta)) {
  if (n_s < 3 || n_t < 3 || n_s % 2 == 0 || n_t % 2 == 0) {
    throw std::invalid_argument("grid dimensions must be odd and at least 3, got " + std::to_string(n_s) +
                                "x" + std::to_string(n_t));
  }
  if (n_u <= 0 || n_v <= 0) throw std::invalid_argument("view dimensions must be positive");
  const std::size_t expected = static_cast<std::size_t>(n_s) * static_cast<std::size_t>(n_t) *
                               static_cast<std::size_t>(n_u) * static_cast<std::size_t>(n_v);
  if (samples_.size() != expected) {
    throw std::invalid_argument("sample count " + std::to_string(samples_.size()) + " does not match grid " +
                                std::to_string(expected));
  }
  for (float x : samples_) {
    if (!std::isfinite(x) || x < 0.0f || x > 1.0f) {
      throw std::invalid_argument("light-field samples must be finite and within [0,1]");
    }
  }
  if ((meta_.baseline_s && *meta_.baseline_s <= 0.0) || (meta_.baseline_t && *meta_.baseline_t <= 0.0)) {
    throw std::invalid_argument("baselines must be positive");
  }
  if (!(meta_.plane_sep_D > 0.0)) throw std::invalid_argument("plane_sep_D must be positive");
}

ImageView LightField::view(int s, int t) const {
  if (s < 0 || t < 0 || s >= n_s_ || t >= n_t_) throw std::out_of_range("view index out of range");
  const std::size_t n = static_cast<std::size_t>(n_u_) * static_cast<std::size_t>(n_v_);
  return ImageView{n_u_, n_v_, std::span<const float>(samples_).subspan(view_offset(s, t), n)};
}

const char* to_string(Orientation o) { return o == Orientation::horizontal ? "horizontal" : "vertical"; }

Image central_view(const LightField& lf) {
  const ImageView v = lf.view(lf.center_s(), lf.center_t());
  Image img(v.width, v.height);
  std::copy(v.pixels.begin(), v.pixels.end(), img.pixels.begin());
  return img;
}

EPI horizontal_epi(const LightField& lf, int t_star, int v_star) {
  if (t_star < 0 || t_star >= lf.n_t() || v_star < 0 || v_star >= lf.n_v()) {
    throw std::out_of_range("horizontal EPI index out of range");
  }
  EPI epi{Orientation::horizontal, t_star, v_star, lf.n_s(), lf.n_u(), {}};
  epi.data.resize(static_cast<std::size_t>(epi.rows) * static_cast<std::size_t>(epi.cols));
  for (int s = 0; s < lf.n_s(); ++s) {
    for (int u = 0; u < lf.n_u(); ++u) {
      epi.data[static_cast<std::size_t>(s) * static_cast<std::size_t>(epi.cols) + static_cast<std::size_t>(u)] =
          lf.at(s, t_star, u, v_star);
    }
  }
  return epi;
}

EPI vertical_epi(const LightField& lf, int s_star, int u_star) {
  if (s_star < 0 || s_star >= lf.n_s() || u_star < 0 || u_star >= lf.n_u()) {
    throw std::out_of_range("vertical EPI index out of range");
  }
  EPI epi{Orientation::vertical, s_star, u_star, lf.n_t(), lf.n_v(), {}};
  epi.data.resize(static_cast<std::size_t>(epi.rows) * static_cast<std::size_t>(epi.cols));
  for (int t = 0; t < lf.n_t(); ++t) {
    for (int v = 0; v < lf.n_v(); ++v) {
      epi.data[static_cast<std::size_t>(t) * static_cast<std::size_t>(epi.cols) + static_cast<std::size_t>(v)] =
          lf.at(s_star, t, u_star, v);
    }
  }
  return epi;
}

namespace {

std::string view_name(int t, int s, const char* ext) {
  return "view_" + std::to_string(t) + "_" + std::to_string(s) + ext;
}

}  // namespace

LightField load_lightfield(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a light-field directory: '" + dir.string() + "'");
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path, ec)) throw FormatError("missing manifest: '" + manifest_path.string() + "'");

  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }

  int n_s = 0, n_t = 0, n_u = 0, n_v = 0;
  LFMetadata meta;
  try {
    n_s = manifest.at("n_s").get<int>();
    n_t = manifest.at("n_t").get<int>();
    n_u = manifest.at("n_u").get<int>();
    n_v = manifest.at("n_v").get<int>();
    if (manifest.contains("baseline_s") && !manifest["baseline_s"].is_null()) {
      meta.baseline_s = manifest["baseline_s"].get<double>();
    }
    if (manifest.contains("baseline_t") && !manifest["baseline_t"].is_null()) {
      meta.baseline_t = manifest["baseline_t"].get<double>();
    }
    meta.plane_sep_D = manifest.value("plane_sep_D", 1.0);
    meta.source = manifest.value("source", std::string{});
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  if (n_s % 2 == 0 || n_t % 2 == 0 || n_s < 3 || n_t < 3) {
    throw FormatError("grid dimensions must be odd (and at least 3), got " + std::to_string(n_s) + "x" +
                      std::to_string(n_t));
  }
  if (n_u <= 0 || n_v <= 0) throw FormatError("view dimensions must be positive");

  const std::size_t view_size = static_cast<std::size_t>(n_u) * static_cast<std::size_t>(n_v);
  std::vector<float> samples(view_size * static_cast<std::size_t>(n_s) * static_cast<std::size_t>(n_t));
  for (int t = 0; t < n_t; ++t) {
    for (int s = 0; s < n_s; ++s) {
      fs::path path = dir / view_name(t, s, ".png");
      if (!fs::exists(path, ec)) path = dir / view_name(t, s, ".pgm");
      if (!fs::exists(path, ec)) throw FormatError("missing view image " + view_name(t, s, ".png"));
      Image img;
      try {
        img = read_gray_image(path);
      } catch (const IoError& e) {
        throw FormatError(std::string("unreadable image: ") + e.what());
      }
      if (img.width != n_u || img.height != n_v) {
        throw FormatError("inconsistent view dimensions in '" + path.filename().string() + "'");
      }
      std::copy(img.pixels.begin(), img.pixels.end(),
                samples.begin() + static_cast<std::ptrdiff_t>(
                                      (static_cast<std::size_t>(t) * static_cast<std::size_t>(n_s) +
                                       static_cast<std::size_t>(s)) * view_size));
    }
  }
  try {
    return LightField(n_s, n_t, n_u, n_v, std::move(samples), std::move(meta));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void save_lightfield(const LightField& lf, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");

  json manifest = {{"n_s", lf.n_s()},
                   {"n_t", lf.n_t()},
                   {"n_u", lf.n_u()},
                   {"n_v", lf.n_v()},
                   {"baseline_s", lf.meta().baseline_s ? json(*lf.meta().baseline_s) : json(nullptr)},
                   {"baseline_t", lf.meta().baseline_t ? json(*lf.meta().baseline_t) : json(nullptr)},
                   {"plane_sep_D", lf.meta().plane_sep_D},
                   {"source", lf.meta().source}};
  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  }
  for (int t = 0; t < lf.n_t(); ++t) {
    for (int s = 0; s < lf.n_s(); ++s) {
      const ImageView v = lf.view(s, t);
      Image img(v.width, v.height);
      std::copy(v.pixels.begin(), v.pixels.end(), img.pixels.begin());
      write_png_gray16(img, dir / view_name(t, s, ".png"));
    }
  }
}

LightField downsample(const LightField& lf, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  const int n_u = lf.n_u() / factor;
  const int n_v = lf.n_v() / factor;
  if (n_u == 0 || n_v == 0) throw std::invalid_argument("downsample factor larger than view");
  std::vector<float> out(static_cast<std::size_t>(lf.n_s()) * static_cast<std::size_t>(lf.n_t()) *
                         static_cast<std::size_t>(n_u) * static_cast<std::size_t>(n_v));
  const float norm = 1.0f / static_cast<float>(factor * factor);
  std::size_t idx = 0;
  for (int t = 0; t < lf.n_t(); ++t) {
    for (int s = 0; s < lf.n_s(); ++s) {
      for (int v = 0; v < n_v; ++v) {
        for (int u = 0; u < n_u; ++u) {
          float acc = 0.0f;
          for (int dv = 0; dv < factor; ++dv) {
            for (int du = 0; du < factor; ++du) acc += lf.at(s, t, u * factor + du, v * factor + dv);
          }
          out[idx++] = std::min(1.0f, acc * norm);
        }
      }
    }
  }
  return LightField(lf.n_s(), lf.n_t(), n_u, n_v, std::move(out), lf.meta());
}

}  // namespace lfr
