#include "jdsr/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument,
          "image dimensions must be non-negative");
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument,
          "image must have 1 or 3 channels, got " + std::to_string(channels));
  data_.assign(pixel_count() * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument,
          "image dimensions must be non-negative");
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument,
          "image must have 1 or 3 channels, got " + std::to_string(channels));
  require(data_.size() == pixel_count() * channels, ErrorCode::kDimensionMismatch,
          "image data length does not match width*height*channels");
  for (double v : data_)
    require(std::isfinite(v), ErrorCode::kNumerical, "image data contains non-finite value");
}

std::vector<double> Image::channel(int c) const {
  std::vector<double> out(pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + c];
  return out;
}

void Image::set_channel(int c, std::span<const double> values) {
  require(values.size() == pixel_count(), ErrorCode::kDimensionMismatch,
          "channel length does not match image");
  for (std::size_t i = 0; i < values.size(); ++i) data_[i * channels_ + c] = values[i];
}

BilinearStencil bilinear_stencil(double x, double y, int width, int height) {
  BilinearStencil s;
  const double max_x = width - 1;
  const double max_y = height - 1;
  s.in_bounds = x >= 0.0 && y >= 0.0 && x <= max_x && y <= max_y;
  const double xc = std::clamp(x, 0.0, max_x);
  const double yc = std::clamp(y, 0.0, max_y);
  int x0 = static_cast<int>(std::floor(xc));
  int y0 = static_cast<int>(std::floor(yc));
  x0 = std::min(x0, std::max(width - 2, 0));
  y0 = std::min(y0, std::max(height - 2, 0));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = xc - x0;
  const double fy = yc - y0;
  s.index = {y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1};
  s.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  return s;
}

ColorSample sample_bilinear(const Image& img, double x, double y) {
  const BilinearStencil s = bilinear_stencil(x, y, img.width(), img.height());
  ColorSample out;
  out.in_bounds = s.in_bounds;
  const auto data = img.data();
  const int nc = img.channels();
  for (int c = 0; c < nc; ++c) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += s.weight[k] * data[static_cast<std::size_t>(s.index[k]) * nc + c];
    out.value[c] = v;
  }
  return out;
}

Image downsample_box(const Image& img, int factor) {
  require(factor >= 1, ErrorCode::kInvalidArgument, "downsample factor must be positive");
  require(img.width() % factor == 0 && img.height() % factor == 0,
          ErrorCode::kDimensionMismatch,
          "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
              " not divisible by factor " + std::to_string(factor));
  if (factor == 1) return img;
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  const int nc = img.channels();
  Image out(w, h, nc);
  const double norm = 1.0 / (factor * factor);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double sum = 0.0;
        for (int j = 0; j < factor; ++j)
          for (int i = 0; i < factor; ++i) sum += img.at(x * factor + i, y * factor + j, c);
        out.at(x, y, c) = sum * norm;
      }
  return out;
}

namespace {

double catmull_rom(double s) {
  constexpr double a = -0.5;
  s = std::abs(s);
  if (s <= 1.0) return ((a + 2) * s - (a + 3)) * s * s + 1;
  if (s < 2.0) return ((a * s - 5 * a) * s + 8 * a) * s - 4 * a;
  return 0.0;
}

struct CubicTaps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

// Taps for every fine coordinate; fine pixel X sits at coarse (X - (f-1)/2)/f.
std::vector<CubicTaps> cubic_taps(int coarse, int factor) {
  std::vector<CubicTaps> taps(static_cast<std::size_t>(coarse) * factor);
  for (std::size_t X = 0; X < taps.size(); ++X) {
    const double src = (static_cast<double>(X) - (factor - 1) / 2.0) / factor;
    const int x0 = static_cast<int>(std::floor(src));
    const double t = src - x0;
    for (int k = 0; k < 4; ++k) {
      taps[X].index[k] = std::clamp(x0 - 1 + k, 0, coarse - 1);
      taps[X].weight[k] = catmull_rom(t - (k - 1));
    }
  }
  return taps;
}

}  // namespace

Image upsample_bicubic(const Image& img, int factor) {
  require(factor >= 1, ErrorCode::kInvalidArgument, "upsample factor must be positive");
  if (factor == 1) return img;
  const int nc = img.channels();
  const int w = img.width() * factor;
  const int h = img.height() * factor;
  const auto tx = cubic_taps(img.width(), factor);
  const auto ty = cubic_taps(img.height(), factor);

  Image horizontal(w, img.height(), nc);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += tx[x].weight[k] * img.at(tx[x].index[k], y, c);
        horizontal.at(x, y, c) = v;
      }
  Image out(w, h, nc);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += ty[y].weight[k] * horizontal.at(x, ty[y].index[k], c);
        out.at(x, y, c) = v;
      }
  return out;
}

GradientField gradient(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  const int nc = img.channels();
  GradientField g{Image(w, h, nc), Image(w, h, nc)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        const double v = img.at(x, y, c);
        g.dx.at(x, y, c) = x + 1 < w ? img.at(x + 1, y, c) - v : 0.0;
        g.dy.at(x, y, c) = y + 1 < h ? img.at(x, y + 1, c) - v : 0.0;
      }
  return g;
}

Image to_gray(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < out.pixel_count(); ++i)
    dst[i] = (src[3 * i] + src[3 * i + 1] + src[3 * i + 2]) / 3.0;
  return out;
}

double psnr(const Image& a, const Image& b, double peak) {
  require(a.same_shape(b), ErrorCode::kDimensionMismatch, "psnr: image shapes differ");
  require(!a.empty(), ErrorCode::kInvalidArgument, "psnr: empty images");
  double sse = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace jdsr
