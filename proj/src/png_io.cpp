#include "lfr/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "lfr/errors.hpp"

namespace lfr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

// libpng reports errors through longjmp; the message is stashed for the
// setjmp site to rethrow as a C++ exception.
[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::uint16_t quantize16(float x) {
  const float c = std::clamp(x, 0.0f, 1.0f);
  return static_cast<std::uint16_t>(std::lround(static_cast<double>(c) * 65535.0));
}

std::uint8_t quantize8(float x) {
  const float c = std::clamp(x, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(static_cast<double>(c) * 255.0));
}

// Owns the libpng read/write structs for the duration of one call.
class PngWriter {
 public:
  explicit PngWriter(std::FILE* f) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message_, png_error_handler,
                                   png_warning_handler);
    if (!png_) throw IoError("png: cannot allocate write struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw IoError("png: cannot allocate info struct");
    }
    png_init_io(png_, f);
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  void write(int width, int height, int bit_depth, int color_type,
             std::vector<png_bytep>& rows) {
    if (setjmp(png_jmpbuf(png_))) throw IoError("png: " + message_);
    png_set_IHDR(png_, info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_, info_);
    if (bit_depth == 16) png_set_swap(png_);
    png_write_image(png_, rows.data());
    png_write_end(png_, nullptr);
  }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  std::string message_;
};

class PngReader {
 public:
  explicit PngReader(std::FILE* f) {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message_, png_error_handler,
                                  png_warning_handler);
    if (!png_) throw IoError("png: cannot allocate read struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw IoError("png: cannot allocate info struct");
    }
    png_init_io(png_, f);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  Image read() {
    std::vector<unsigned char> buffer;
    std::vector<png_bytep> rows;
    int width = 0, height = 0, channels = 0, depth = 0;
    if (setjmp(png_jmpbuf(png_))) throw FormatError("png: " + message_);

    png_read_info(png_, info_);
    width = static_cast<int>(png_get_image_width(png_, info_));
    height = static_cast<int>(png_get_image_height(png_, info_));
    const int color_type = png_get_color_type(png_, info_);
    const int bit_depth = png_get_bit_depth(png_, info_);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png_);
    png_set_strip_alpha(png_);
    if (bit_depth == 16) png_set_swap(png_);
    png_read_update_info(png_, info_);

    channels = png_get_channels(png_, info_);
    depth = png_get_bit_depth(png_, info_);
    const std::size_t rowbytes = png_get_rowbytes(png_, info_);
    buffer.resize(rowbytes * static_cast<std::size_t>(height));
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
    }
    png_read_image(png_, rows.data());
    png_read_end(png_, nullptr);

    Image img(width, height);
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < height; ++y) {
      const unsigned char* row = rows[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) {
        auto sample = [&](int c) -> double {
          const std::size_t i = static_cast<std::size_t>(x * channels + c);
          if (depth == 16) {
            std::uint16_t value;
            std::memcpy(&value, row + 2 * i, 2);
            return value;
          }
          return row[i];
        };
        double value;
        if (channels >= 3) {
          value = 0.299 * sample(0) + 0.587 * sample(1) + 0.114 * sample(2);
        } else {
          value = sample(0);
        }
        img.at(x, y) = static_cast<float>(value / maxval);
      }
    }
    return img;
  }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  std::string message_;
};

}  // namespace

Image read_png_gray(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG file: '" + path.string() + "'");
  }
  std::rewind(f.get());
  PngReader reader(f.get());
  return reader.read();
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  auto next_token = [&]() -> std::string {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string ignored;
        std::getline(in, ignored);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };

  if (next_token() != "P5") throw FormatError("unsupported PGM (need binary P5): '" + path.string() + "'");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError("malformed PGM header: '" + path.string() + "'");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError("malformed PGM header: '" + path.string() + "'");
  }
  const bool wide = maxval > 255;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(count * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw FormatError("truncated PGM data: '" + path.string() + "'");
  }
  Image img(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    const double value = wide ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    img.pixels[i] = static_cast<float>(value / maxval);
  }
  return img;
}

Image read_gray_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  return read_png_gray(path);
}

void write_png_gray16(const Image& img, const std::filesystem::path& path) {
  auto f = open_file(path, "wb");
  std::vector<std::uint16_t> data(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), data.begin(), quantize16);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        reinterpret_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width));
  }
  PngWriter writer(f.get());
  writer.write(img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png_gray8(const Image& img, const std::filesystem::path& path) {
  auto f = open_file(path, "wb");
  std::vector<std::uint8_t> data(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), data.begin(), quantize8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] = data.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
  }
  PngWriter writer(f.get());
  writer.write(img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png_rgb8(const RgbImage& img, const std::filesystem::path& path) {
  auto f = open_file(path, "wb");
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  auto* base = const_cast<Rgb8*>(img.pixels.data());
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        reinterpret_cast<png_bytep>(base + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width));
  }
  PngWriter writer(f.get());
  writer.write(img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_pgm16(const std::vector<std::uint16_t>& samples, int width, int height,
                 const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << width << " " << height << "\n65535\n";
  for (std::uint16_t s : samples) {
    const char bytes[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace lfr
