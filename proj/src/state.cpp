#include "jdsr/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {

std::size_t VisibilityMask::visible_count() const {
  return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), 1));
}

Pose previous_pose(const std::vector<Pose>& poses, int t) {
  require(t >= 0 && t < static_cast<int>(poses.size()), ErrorCode::kInvalidArgument,
          "previous_pose: frame out of range");
  if (t > 0) return poses[t - 1];
  require(poses.size() >= 2, ErrorCode::kInvalidArgument,
          "previous_pose: frame 0 needs a second frame to extrapolate");
  return poses[0] * poses[1].inverse() * poses[0];
}

Pose SequenceState::previous_pose(int t) const { return jdsr::previous_pose(poses(), t); }

std::vector<int> SequenceState::neighbors(int t, int radius) const {
  std::vector<int> out;
  for (int s = std::max(0, t - radius); s <= std::min(size() - 1, t + radius); ++s)
    if (s != t) out.push_back(s);
  return out;
}

VisibilityMask SequenceState::mask(int t, int s) const {
  const auto it = frames[t].visibility.find(s);
  if (it != frames[t].visibility.end()) return it->second;
  return VisibilityMask::all_visible(lr_width(), lr_height());
}

std::vector<Pose> SequenceState::poses() const {
  std::vector<Pose> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.pose);
  return out;
}

void SequenceState::validate() const {
  capture.validate();
  require(!frames.empty(), ErrorCode::kInvalidArgument, "sequence state has no frames");
  const int w = frames[0].latent.width();
  const int h = frames[0].latent.height();
  require(w % capture.factor == 0 && h % capture.factor == 0, ErrorCode::kDimensionMismatch,
          "latent size not divisible by the capture factor");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    const std::string tag = "frame " + std::to_string(t) + ": ";
    require(f.latent.width() == w && f.latent.height() == h, ErrorCode::kDimensionMismatch,
            tag + "latent size differs");
    require(f.depth.width() == w && f.depth.height() == h, ErrorCode::kDimensionMismatch,
            tag + "depth size differs from latent");
    for (double d : f.depth.values())
      require(d > 0 && std::isfinite(d), ErrorCode::kNumerical, tag + "inverse depth must be > 0");
    require(f.pose.is_valid(1e-6), ErrorCode::kNumerical, tag + "pose rotation is not orthonormal");
    for (const auto& [s, m] : f.visibility)
      require(m.width == lr_width() && m.height == lr_height(), ErrorCode::kDimensionMismatch,
              tag + "mask size must equal the observation size");
  }
}

}  // namespace jdsr
