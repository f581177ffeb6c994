#include "jdsr/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "jdsr/error.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/pose_io.hpp"

namespace fs = std::filesystem;

namespace jdsr {

Image depth_to_image(const InverseDepthMap& depth) {
  return Image(depth.width(), depth.height(), 1,
               std::vector<double>(depth.values().begin(), depth.values().end()));
}

InverseDepthMap image_to_depth(const Image& img) {
  require(img.channels() == 1, ErrorCode::kDimensionMismatch, "depth maps must be single channel");
  return InverseDepthMap(img.width(), img.height(),
                         std::vector<double>(img.data().begin(), img.data().end()));
}

std::string energy_history_text(const std::vector<EnergyRecord>& history) {
  std::string out = "# iteration phase matching self_consistency regularization total\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d %s %.17g %.17g %.17g %.17g\n", r.iteration, r.phase.c_str(),
                  r.energy.matching, r.energy.self_consistency, r.energy.regularization,
                  r.energy.total);
    out += buf;
  }
  if (!history.empty()) out += history.back().energy.report();
  return out;
}

void write_checkpoint(const fs::path& dir, const SequenceState& state,
                      const std::vector<EnergyRecord>& history) {
  fs::create_directories(dir);
  for (int t = 0; t < state.size(); ++t) {
    const auto& f = state.frames[t];
    write_pfm(dir / ("I_" + std::to_string(t) + ".pfm"), f.latent);
    write_pfm(dir / ("D_" + std::to_string(t) + ".pfm"), depth_to_image(f.depth));
    for (const auto& [s, mask] : f.visibility)
      write_mask_png(dir / ("masks_" + std::to_string(t) + "_" + std::to_string(s) + ".png"), mask.width,
                     mask.height, mask.visible);
  }
  write_poses(dir / "poses.txt", state.poses());
  std::ofstream out(dir / "energy.txt");
  require(out.good(), ErrorCode::kIo, "cannot write " + (dir / "energy.txt").string());
  out << energy_history_text(history);
}

void write_bundle(const fs::path& dir, const GroundTruthBundle& bundle, const std::vector<Pose>& seeds) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < bundle.latent.size(); ++t) {
    const std::string i = std::to_string(t);
    if (t < bundle.observed.size()) write_pfm(dir / ("B_" + i + ".pfm"), bundle.observed[t]);
    write_pfm(dir / ("gt_I_" + i + ".pfm"), bundle.latent[t]);
    write_pfm(dir / ("gt_D_" + i + ".pfm"), depth_to_image(bundle.depth[t]));
  }
  write_poses(dir / "gt_poses.txt", bundle.poses);
  write_poses(dir / "seed_poses.txt", seeds);
}

std::vector<Image> read_frames(const fs::path& dir, const std::string& prefix, int count) {
  std::vector<Image> out;
  for (int t = 0; t < count; ++t) {
    const fs::path p = dir / (prefix + std::to_string(t) + ".pfm");
    require(fs::exists(p), ErrorCode::kIo, "missing frame file " + p.string());
    out.push_back(read_pfm(p));
  }
  return out;
}

int count_frames(const fs::path& dir, const std::string& prefix) {
  int n = 0;
  while (fs::exists(dir / (prefix + std::to_string(n) + ".pfm"))) ++n;
  return n;
}

}  // namespace jdsr
