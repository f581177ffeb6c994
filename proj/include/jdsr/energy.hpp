#pragma once

#include <string>
#include <vector>

#include "jdsr/image.hpp"
#include "jdsr/state.hpp"

namespace jdsr {

struct EnergyParams {
  double lambda_s = 30.0;
  double lambda_d = 9.0;
  double lambda_i = 0.45;
  double sigma_g = 0.1;
  int neighbor_radius = 1;

  void validate() const;
};

/// g_t(x) in (0, 1] on the HR grid.
struct EdgeWeightMap {
  int width = 0;
  int height = 0;
  std::vector<double> weight;
};

/// exp(-|grad B_up|^2 / sigma_g^2) with the gradient of the channel mean.
EdgeWeightMap edge_weight(const Image& upsampled_observation, double sigma_g);

/// Observed LR frames with their fixed edge weights.
struct Problem {
  std::vector<Image> observed;
  std::vector<EdgeWeightMap> edge_weights;
};

Problem make_problem(std::vector<Image> observed, int factor, const EnergyParams& params);

struct FrameEnergy {
  double matching = 0.0;
  double self_consistency = 0.0;
  double regularization = 0.0;
  double total() const { return matching + self_consistency + regularization; }
};

struct EnergyBreakdown {
  std::vector<FrameEnergy> frames;
  double matching = 0.0;
  double self_consistency = 0.0;
  double regularization = 0.0;
  double total = 0.0;

  static EnergyBreakdown from_frames(std::vector<FrameEnergy> frames);
  /// One `frame <t> <term> <value>` line per frame and term, then totals.
  std::string report() const;
};

/// Sum over s in N(t) and visible, capture-valid LR pixels of the L1 colour
/// residual between B_t and the blurred, warped latent image of s.
double matching_term(int t, const SequenceState& state, const Problem& problem,
                     const EnergyParams& params);
double selfconsistency_term(int t, const SequenceState& state, const Problem& problem,
                            const EnergyParams& params);
double regularization_term(int t, const SequenceState& state, const Problem& problem,
                           const EnergyParams& params);
EnergyBreakdown total_energy(const SequenceState& state, const Problem& problem,
                             const EnergyParams& params);

/// Isotropic TV pieces, exposed for the solver.
double image_tv(const Image& img);
double weighted_depth_tv(const InverseDepthMap& depth, const EdgeWeightMap& g);

/// Masked L1 distance over channels; `valid`/`visible` may be empty.
double masked_l1(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid,
                 const std::vector<std::uint8_t>& visible);

}  // namespace jdsr
