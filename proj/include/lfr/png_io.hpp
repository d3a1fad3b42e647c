#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfr/image.hpp"

namespace lfr {

// Grayscale readers accept 8/16-bit gray, gray+alpha, RGB(A) and palette PNGs and
// binary PGM (P5, maxval up to 65535). Colour input is reduced to luma with
// weights 0.299/0.587/0.114. Output samples are normalized to [0,1].
Image read_gray_image(const std::filesystem::path& path);
Image read_png_gray(const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

// Values are clamped to [0,1] and quantized to 16 bits.
void write_png_gray16(const Image& img, const std::filesystem::path& path);
void write_png_gray8(const Image& img, const std::filesystem::path& path);
void write_png_rgb8(const RgbImage& img, const std::filesystem::path& path);

/// 16-bit binary PGM with raw integer samples and an optional header comment.
void write_pgm16(const std::vector<std::uint16_t>& samples, int width, int height,
                 const std::filesystem::path& path, const std::string& comment = {});

}  // namespace lfr
