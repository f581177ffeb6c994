#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "jdsr/capture.hpp"
#include "jdsr/energy.hpp"
#include "jdsr/solver.hpp"
#include "jdsr/synth.hpp"

namespace jdsr {

/// Everything a run or a synthesis needs, read from a flat `key = value`
/// file. All keys have defaults; unknown keys are rejected.
struct RunConfig {
  EnergyParams energy;
  SolverConfig solver;
  CaptureModel capture;  ///< intrinsics, samples (M), exposure and factor
  SceneSpec scene;       ///< shares intrinsics, factor and exposure with capture
  /// Bicubic upsampling applied to observations before solving (the
  /// blur-unaware baseline runs on upsampled frames with factor 1).
  int input_upsample = 1;
  /// Norm of the random twist applied to every seed pose written by synth.
  double seed_perturbation = 0.0;
  std::uint64_t seed = 1;

  RunConfig();
  void validate() const;
  /// Fully resolved config; parsing it back yields an identical config.
  std::string to_text() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace jdsr
