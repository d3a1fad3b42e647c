#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfr {

/// Non-owning view of a row-major grayscale image. `u` is the column, `v` the row.
struct ImageView {
  int width = 0;
  int height = 0;
  std::span<const float> pixels;

  float at(int u, int v) const {
    return pixels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(u)];
  }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

/// Owning row-major grayscale image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float& at(int u, int v) {
    return pixels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(u)];
  }
  float at(int u, int v) const {
    return pixels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(u)];
  }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }

  ImageView view() const { return ImageView{width, height, pixels}; }
};

struct Rgb8 {
  unsigned char r = 0, g = 0, b = 0;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> pixels;

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {}

  Rgb8& at(int u, int v) {
    return pixels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(u)];
  }
};

}  // namespace lfr
