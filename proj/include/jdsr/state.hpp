#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "jdsr/capture.hpp"
#include "jdsr/geometry.hpp"
#include "jdsr/image.hpp"

namespace jdsr {

/// Omega_ts: LR pixels of frame t that are visible from frame s.
struct VisibilityMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> visible;

  static VisibilityMask all_visible(int width, int height) {
    return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1)};
  }
  std::size_t visible_count() const;
  bool operator==(const VisibilityMask&) const = default;
};

struct FrameState {
  Image latent;           ///< I_t at HR
  InverseDepthMap depth;  ///< D_t at HR
  Pose pose;              ///< P_t
  std::map<int, VisibilityMask> visibility;  ///< keyed by neighbour index s
};

/// The optimization variable: every frame's latent image, inverse depth and
/// pose plus visibility masks, sharing one capture model.
struct SequenceState {
  std::vector<FrameState> frames;
  CaptureModel capture;

  int size() const { return static_cast<int>(frames.size()); }
  int lr_width() const { return frames.empty() ? 0 : frames[0].latent.width() / capture.factor; }
  int lr_height() const { return frames.empty() ? 0 : frames[0].latent.height() / capture.factor; }

  /// Pose at the previous frame time; frame 0 extrapolates P_0 P_1^-1 P_0.
  Pose previous_pose(int t) const;
  /// Frames within `radius` of t, excluding t, in ascending order.
  std::vector<int> neighbors(int t, int radius) const;
  /// Mask of frame t w.r.t. s, or all-visible when none was computed.
  VisibilityMask mask(int t, int s) const;

  std::vector<Pose> poses() const;
  void validate() const;
};

Pose previous_pose(const std::vector<Pose>& poses, int t);

}  // namespace jdsr
