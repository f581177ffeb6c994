#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jdsr/solver.hpp"
#include "jdsr/synth.hpp"

namespace jdsr {

Image depth_to_image(const InverseDepthMap& depth);
InverseDepthMap image_to_depth(const Image& img);

/// `iteration phase matching self_consistency regularization total` per
/// record, followed by the per-frame report of the last record.
std::string energy_history_text(const std::vector<EnergyRecord>& history);

/// I_t.pfm, D_t.pfm, poses.txt, energy.txt and masks_t_s.png.
void write_checkpoint(const std::filesystem::path& dir, const SequenceState& state,
                      const std::vector<EnergyRecord>& history);

/// B_t.pfm plus gt_I_t.pfm, gt_D_t.pfm, gt_poses.txt and seed_poses.txt.
void write_bundle(const std::filesystem::path& dir, const GroundTruthBundle& bundle,
                  const std::vector<Pose>& seeds);

/// Reads `<prefix><t>.pfm` for t = 0..count-1; a missing file is an error
/// naming the file.
std::vector<Image> read_frames(const std::filesystem::path& dir, const std::string& prefix, int count);
/// Counts consecutive `<prefix><t>.pfm` files starting at t = 0.
int count_frames(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace jdsr
