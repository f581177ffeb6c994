#include "jdsr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  require(f != nullptr, ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

}  // namespace

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  const std::string where = "corrupt PFM " + path.string() + ": ";

  std::string magic;
  in >> magic;
  require(magic == "PF" || magic == "Pf", ErrorCode::kParse, where + "bad magic");
  const int channels = magic == "PF" ? 3 : 1;
  long long width = 0, height = 0;
  double scale = 0.0;
  in >> width >> height >> scale;
  require(in.good() && width > 0 && height > 0 && scale != 0.0 && std::isfinite(scale),
          ErrorCode::kParse, where + "bad header");
  require(width < (1 << 20) && height < (1 << 20), ErrorCode::kParse, where + "dimensions too large");
  in.get();  // single whitespace byte after the scale line

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<float> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
  require(static_cast<std::size_t>(in.gcount()) == count * sizeof(float), ErrorCode::kParse,
          where + "truncated pixel data");

  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  if (file_little != host_little) {
    for (float& f : raw) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = byteswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }

  std::vector<double> data(count);
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  for (long long y = 0; y < height; ++y) {
    const std::size_t src = static_cast<std::size_t>(height - 1 - y) * row;
    for (std::size_t i = 0; i < row; ++i) {
      const double v = raw[src + i];
      require(std::isfinite(v), ErrorCode::kParse, where + "non-finite sample");
      data[static_cast<std::size_t>(y) * row + i] = v;
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(data));
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  auto f = open_file(path, "wb");
  std::fprintf(f.get(), "%s\n%d %d\n-1.0\n", img.channels() == 3 ? "PF" : "Pf", img.width(),
               img.height());
  const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<float> buf(row);
  const auto data = img.data();
  for (int y = img.height() - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      float v = static_cast<float>(data[static_cast<std::size_t>(y) * row + i]);
      if constexpr (std::endian::native == std::endian::big) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = byteswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
      buf[i] = v;
    }
    require(std::fwrite(buf.data(), sizeof(float), row, f.get()) == row, ErrorCode::kIo,
            "short write to " + path.string());
  }
}

Image read_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::kIo, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParse, "corrupt PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int src_channels = png_get_channels(png, info);
  std::vector<png_byte> pixels(static_cast<std::size_t>(png_get_rowbytes(png, info)) * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * png_get_rowbytes(png, info);
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  const int channels = src_channels >= 3 ? 3 : 1;
  Image img(width, height, channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = rows[y][x * src_channels + c] / 255.0;
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "failed writing PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * img.channels() + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_mask_png(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& mask) {
  require(mask.size() == static_cast<std::size_t>(width) * height, ErrorCode::kDimensionMismatch,
          "mask size does not match dimensions");
  Image img(width, height, 1);
  auto d = img.data();
  for (std::size_t i = 0; i < mask.size(); ++i) d[i] = mask[i] ? 1.0 : 0.0;
  write_png(path, img);
}

}  // namespace jdsr
