#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace jdsr {

/// Row-major, channel-interleaved grid of samples. Pixel centers sit on
/// integer coordinates. Observed images hold values in [0,1]; estimated
/// latent images are not clamped.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// One channel as a contiguous vector of pixel_count() values.
  std::vector<double> channel(int c) const;
  void set_channel(int c, std::span<const double> values);

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Pairs of (image, gradient) share dimensions; dx/dy are forward differences.
struct GradientField {
  Image dx;
  Image dy;
};

/// Four-tap bilinear stencil into a width x height grid. Coordinates are
/// clamped to the grid; in_bounds records whether clamping was needed.
struct BilinearStencil {
  std::array<int, 4> index{};
  std::array<double, 4> weight{};
  bool in_bounds = false;
};

BilinearStencil bilinear_stencil(double x, double y, int width, int height);

struct ColorSample {
  std::array<double, 3> value{};
  bool in_bounds = false;
};

ColorSample sample_bilinear(const Image& img, double x, double y);

Image downsample_box(const Image& img, int factor);
Image upsample_bicubic(const Image& img, int factor);
GradientField gradient(const Image& img);

/// Mean of channels; returns img unchanged when it is already single channel.
Image to_gray(const Image& img);

/// 10 log10(peak^2 / MSE) over all channels, +infinity when MSE is zero.
double psnr(const Image& a, const Image& b, double peak = 1.0);

}  // namespace jdsr
