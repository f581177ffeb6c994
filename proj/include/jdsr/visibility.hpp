#pragma once

#include "jdsr/capture.hpp"
#include "jdsr/state.hpp"

namespace jdsr {

/// Omega_ts for the LR grid of frame t. LR pixel centers are warped into frame
/// s and bucketed by their rounded LR cell there; a pixel is visible only when
/// its inverse depth is strictly the largest in its bucket and it lands inside
/// the image in front of the camera.
VisibilityMask compute_visibility(const InverseDepthMap& depth_t, const Pose& pose_t,
                                  const Pose& pose_s, const CaptureModel& model);

/// Recomputes every mask of every frame for the current structure.
void update_visibility(SequenceState& state, int neighbor_radius);

}  // namespace jdsr
