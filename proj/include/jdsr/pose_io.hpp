#pragma once

#include <filesystem>
#include <vector>

#include "jdsr/geometry.hpp"

namespace jdsr {

/// One line per frame: `frame_index tx ty tz qx qy qz qw`, storing the
/// world-to-camera transform P (quaternion Hamilton, w last). Frames must be
/// listed as 0..N-1 in order. Quaternions are normalized on read; a norm off
/// by more than 1e-3 is rejected.
std::vector<Pose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<Pose>& poses);

}  // namespace jdsr
