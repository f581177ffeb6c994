#include "jdsr/visibility.hpp"

#include <cmath>
#include <limits>

#include "jdsr/error.hpp"

namespace jdsr {

VisibilityMask compute_visibility(const InverseDepthMap& depth_t, const Pose& pose_t,
                                  const Pose& pose_s, const CaptureModel& model) {
  const int f = model.factor;
  require(depth_t.width() % f == 0 && depth_t.height() % f == 0, ErrorCode::kDimensionMismatch,
          "visibility: depth size not divisible by factor");
  const int lw = depth_t.width() / f;
  const int lh = depth_t.height() / f;
  const std::size_t n = static_cast<std::size_t>(lw) * lh;
  const double shift = (f - 1) / 2.0;
  const RelativeWarp warp(pose_t, pose_s, model.K);

  std::vector<long> cell(n, -1);
  std::vector<double> inv(n, 0.0);
  for (int Y = 0; Y < lh; ++Y)
    for (int X = 0; X < lw; ++X) {
      double d = 0.0;
      for (int j = 0; j < f; ++j)
        for (int i = 0; i < f; ++i) d += depth_t.at(X * f + i, Y * f + j);
      d /= f * f;
      const std::size_t r = static_cast<std::size_t>(Y) * lw + X;
      inv[r] = d;
      const auto p = warp(X * f + shift, Y * f + shift, d);
      if (!p) continue;
      const double cx = std::floor((p->pixel.x() - shift) / f + 0.5);
      const double cy = std::floor((p->pixel.y() - shift) / f + 0.5);
      if (cx < 0 || cy < 0 || cx > lw - 1 || cy > lh - 1) continue;
      cell[r] = static_cast<long>(cy) * lw + static_cast<long>(cx);
    }

  // Per target cell: the largest inverse depth and how often it occurs.
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  std::vector<int> best_count(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (cell[r] < 0) continue;
    const std::size_t c = static_cast<std::size_t>(cell[r]);
    if (inv[r] > best[c]) {
      best[c] = inv[r];
      best_count[c] = 1;
    } else if (inv[r] == best[c]) {
      ++best_count[c];
    }
  }
  VisibilityMask mask{lw, lh, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t r = 0; r < n; ++r) {
    if (cell[r] < 0) continue;
    const std::size_t c = static_cast<std::size_t>(cell[r]);
    mask.visible[r] = inv[r] == best[c] && best_count[c] == 1;
  }
  return mask;
}

void update_visibility(SequenceState& state, int neighbor_radius) {
  for (int t = 0; t < state.size(); ++t) {
    auto& frame = state.frames[t];
    frame.visibility.clear();
    for (int s : state.neighbors(t, neighbor_radius))
      frame.visibility[s] =
          compute_visibility(frame.depth, frame.pose, state.frames[s].pose, state.capture);
  }
}

}  // namespace jdsr
