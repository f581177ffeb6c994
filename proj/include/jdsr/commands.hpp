#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jdsr/config.hpp"
#include "jdsr/eval.hpp"
#include "jdsr/solver.hpp"

namespace jdsr {

/// Seed poses: ground truth with a random twist of norm `magnitude` applied
/// to every frame (deterministic in `seed`).
std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double magnitude, std::uint64_t seed);

/// Renders the configured scene into out_dir (observations, ground truth,
/// seed poses, resolved config.txt).
void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir);

struct RunSummary {
  int frames = 0;
  int iterations = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  std::vector<int> flagged_frames;
};

/// Reads B_t.pfm and seed_poses.txt from in_dir, runs the pipeline and writes
/// iter_<k>/ checkpoints plus the final state and config.txt into out_dir.
RunSummary cmd_run(const RunConfig& config, const std::filesystem::path& in_dir,
                   const std::filesystem::path& out_dir);

/// Compares each estimate directory (I_t.pfm, D_t.pfm, poses.txt) with the
/// ground truth in gt_dir and writes report_path plus a .csv next to it.
std::vector<EvalReport> cmd_eval(const std::vector<std::filesystem::path>& est_dirs,
                                 const std::filesystem::path& gt_dir,
                                 const std::filesystem::path& report_path);

}  // namespace jdsr
