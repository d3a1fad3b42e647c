#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "lfr/errors.hpp"
#include "lfr/png_io.hpp"
#include "test_support.hpp"

namespace {

lfr::Image random_image(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  lfr::Image img(w, h);
  for (float& p : img.pixels) p = d(rng);
  return img;
}

TEST(PngIo, Gray16RoundTripWithinOneLevel) {
  lfr::testing::TempDir dir;
  const lfr::Image img = random_image(37, 23, 1);
  lfr::write_png_gray16(img, dir / "a.png");
  const lfr::Image back = lfr::read_gray_image(dir / "a.png");
  ASSERT_EQ(back.width, 37);
  ASSERT_EQ(back.height, 23);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_LE(std::abs(back.pixels[i] - img.pixels[i]), 1.0f / 65535.0f);
}

TEST(PngIo, QuantizedSamplesAreStable) {
  lfr::testing::TempDir dir;
  lfr::Image img(4, 4);
  for (int i = 0; i < 16; ++i) img.pixels[i] = static_cast<float>((i * 4097) / 65535.0);
  lfr::write_png_gray16(img, dir / "q.png");
  EXPECT_EQ(lfr::read_png_gray(dir / "q.png").pixels, img.pixels);
}

TEST(PngIo, Gray8RoundTrip) {
  lfr::testing::TempDir dir;
  const lfr::Image img = random_image(16, 9, 2);
  lfr::write_png_gray8(img, dir / "b.png");
  const lfr::Image back = lfr::read_png_gray(dir / "b.png");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_LE(std::abs(back.pixels[i] - img.pixels[i]), 0.5f / 255.0f + 1e-6f);
}

TEST(PngIo, RgbReadsAsLuma) {
  lfr::testing::TempDir dir;
  lfr::RgbImage rgb(2, 1);
  rgb.at(0, 0) = {255, 0, 0};
  rgb.at(1, 0) = {10, 200, 30};
  lfr::write_png_rgb8(rgb, dir / "c.png");
  const lfr::Image g = lfr::read_gray_image(dir / "c.png");
  EXPECT_NEAR(g.at(0, 0), 0.299, 1e-6);
  EXPECT_NEAR(g.at(1, 0), (0.299 * 10 + 0.587 * 200 + 0.114 * 30) / 255.0, 1e-6);
}

TEST(PngIo, Pgm16RoundTripKeepsComment) {
  lfr::testing::TempDir dir;
  std::vector<std::uint16_t> v = {0, 1, 65535, 300, 40000, 7};
  lfr::write_pgm16(v, 3, 2, dir / "d.pgm", "depth_scale 0.5");
  std::ifstream in(dir / "d.pgm");
  std::string magic, comment;
  std::getline(in, magic);
  std::getline(in, comment);
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(comment, "# depth_scale 0.5");
  const lfr::Image img = lfr::read_gray_image(dir / "d.pgm");
  for (int i = 0; i < 6; ++i) EXPECT_FLOAT_EQ(img.pixels[i], static_cast<float>(v[i] / 65535.0));
}

TEST(PngIo, Pgm8) {
  lfr::testing::TempDir dir;
  {
    std::ofstream out(dir / "e.pgm", std::ios::binary);
    out << "P5\n# note\n2 1\n255\n";
    out.put(static_cast<char>(0));
    out.put(static_cast<char>(255));
  }
  const lfr::Image img = lfr::read_pgm(dir / "e.pgm");
  EXPECT_EQ(img.pixels, (std::vector<float>{0.0f, 1.0f}));
}

TEST(PngIo, Errors) {
  lfr::testing::TempDir dir;
  EXPECT_THROW(lfr::read_gray_image(dir / "missing.png"), lfr::IoError);
  {
    std::ofstream out(dir / "junk.png");
    out << "not a png at all";
  }
  EXPECT_THROW(lfr::read_png_gray(dir / "junk.png"), lfr::FormatError);
  {
    std::ofstream out(dir / "short.pgm", std::ios::binary);
    out << "P5\n4 4\n255\nab";
  }
  EXPECT_THROW(lfr::read_pgm(dir / "short.pgm"), lfr::FormatError);
  // A regular file cannot act as a directory, even for root.
  EXPECT_THROW(lfr::write_png_gray16(lfr::Image(2, 2), dir / "junk.png" / "x.png"), lfr::IoError);
  EXPECT_THROW(lfr::write_pgm16({0}, 1, 1, dir / "junk.png" / "x.pgm"), lfr::IoError);
}

}  // namespace
