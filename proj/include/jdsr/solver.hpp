#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jdsr/energy.hpp"
#include "jdsr/lsq.hpp"
#include "jdsr/state.hpp"

namespace jdsr {

struct SolverConfig {
  int max_iter = 3;
  int irls_inner = 3;
  int cg_iters = 200;
  double cg_tol = 1e-8;
  double pyramid_factor = 0.5;
  int pyramid_min_dim = 20;
  double irls_epsilon = 1e-4;
  double step_damping = 1e-3;
  double d_min = 0.01;
  double d_max = 10.0;
  bool relinearize_inner = false;
  /// Off for the blur-unaware baseline, which keeps the initial images.
  bool update_images = true;
  /// Frames whose seed pose is taken as given during initialization.
  int seed_frames = 2;
  /// Gauss-Newton relinearizations per pyramid level during initialization.
  int init_warps = 5;
  /// Levenberg-style damping of the initialization steps.
  double init_damping = 1e-2;
  double init_inverse_depth = 1.0;

  void validate() const;
};

/// Per-frame depth increments and left-multiplied pose twists.
struct StructureDelta {
  std::vector<std::vector<double>> depth;
  std::vector<Twist> twist;
};

struct ImageUpdateReport {
  bool accepted = false;
  bool breakdown = false;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

struct StructureUpdateReport {
  bool accepted = false;
  bool poses_frozen = false;
  int halvings = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  StructureDelta delta;
};

struct InitReport {
  std::vector<int> diverged_frames;
};

/// Latent images start as bicubic upsamplings; depths and the poses of frames
/// beyond `seed_frames` come from coarse-to-fine minimization of the symmetric
/// blur-aware photometric cost between consecutive frames. `seeds` must hold
/// at least seed_frames poses; further entries start the remaining frames.
SequenceState initialize(const Problem& problem, const std::vector<Pose>& seeds,
                         const CaptureModel& capture, const EnergyParams& params,
                         const SolverConfig& config, InitReport* report = nullptr);

/// Objective of the per-frame image subproblem with structure fixed.
double image_objective(int t, const Image& latent, const SequenceState& state,
                       const Problem& problem, const EnergyParams& params);

/// IRLS on the image subproblem of frame t; returns the previous latent image
/// when the new one does not decrease the objective.
Image update_image(int t, const SequenceState& state, const Problem& problem,
                   const EnergyParams& params, const SolverConfig& config,
                   ImageUpdateReport* report = nullptr);

/// One linearized joint depth/pose step with backtracking on the true energy.
/// Frame 0's pose is the gauge and never moves.
StructureUpdateReport update_structure(SequenceState& state, const Problem& problem,
                                       const EnergyParams& params, const SolverConfig& config);

struct EnergyRecord {
  int iteration = 0;
  std::string phase;  ///< init, image, structure
  EnergyBreakdown energy;
};

struct PipelineResult {
  SequenceState state;
  std::vector<EnergyRecord> history;
  std::vector<int> flagged_frames;
  std::vector<StructureUpdateReport> structure_steps;
};

/// Called after every outer iteration with the iteration number (1-based).
using CheckpointFn = std::function<void(int, const SequenceState&, const std::vector<EnergyRecord>&)>;

PipelineResult run_pipeline(const Problem& problem, const std::vector<Pose>& seeds,
                            const CaptureModel& capture, const EnergyParams& params,
                            const SolverConfig& config, const CheckpointFn& checkpoint = {});

/// Alternates image, structure and visibility updates from an existing state.
PipelineResult optimize(SequenceState state, const Problem& problem, const EnergyParams& params,
                        const SolverConfig& config, const CheckpointFn& checkpoint = {});

}  // namespace jdsr

namespace jdsr {

/// Poses and depth entering the initialization cost of frame t against s.
struct PairGeometry {
  Pose pose_t;
  Pose prev_t;
  Pose pose_s;
  Pose prev_s;
};

/// Symmetric blur-aware photometric cost between images B_t and B_s (all
/// channels) plus lambda_d times the isotropic TV of `depth`. The blur kernels
/// are taken from `blur` (K, M, exposure; factor is ignored) evaluated at the
/// grid of `depth`, so both images must share its size.
double initialization_energy(const Image& b_t, const Image& b_s, const InverseDepthMap& depth,
                             const PairGeometry& geometry, const CaptureModel& blur,
                             double lambda_d);

}  // namespace jdsr
