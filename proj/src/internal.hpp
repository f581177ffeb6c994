#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "jdsr/image.hpp"

namespace jdsr::internal {

/// Central differences with one-sided differences at the border; used for
/// sampling image derivatives at continuous warp targets.
inline GradientField central_gradient(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  const int nc = img.channels();
  GradientField g{Image(w, h, nc), Image(w, h, nc)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      for (int c = 0; c < nc; ++c) {
        g.dx.at(x, y, c) = xr > xl ? (img.at(xr, y, c) - img.at(xl, y, c)) / (xr - xl) : 0.0;
        g.dy.at(x, y, c) = yd > yu ? (img.at(x, yd, c) - img.at(x, yu, c)) / (yd - yu) : 0.0;
      }
    }
  return g;
}

inline double irls_weight(double scale, double magnitude, double epsilon) {
  return scale / std::max(std::abs(magnitude), epsilon);
}

}  // namespace jdsr::internal
