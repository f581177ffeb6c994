#include "jdsr/energy.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {

void EnergyParams::validate() const {
  require(lambda_s >= 0 && lambda_d >= 0 && lambda_i >= 0, ErrorCode::kInvalidArgument,
          "energy weights must be non-negative");
  require(sigma_g > 0, ErrorCode::kInvalidArgument, "sigma_g must be positive");
  require(neighbor_radius >= 1, ErrorCode::kInvalidArgument, "neighbor_radius must be >= 1");
}

EdgeWeightMap edge_weight(const Image& upsampled_observation, double sigma_g) {
  require(sigma_g > 0, ErrorCode::kInvalidArgument, "sigma_g must be positive");
  const Image& img = upsampled_observation;
  const GradientField g = gradient(img);
  EdgeWeightMap out{img.width(), img.height(), std::vector<double>(img.pixel_count())};
  const int nc = img.channels();
  const double inv_s2 = 1.0 / (sigma_g * sigma_g);
  const auto dx = g.dx.data();
  const auto dy = g.dy.data();
  for (std::size_t i = 0; i < out.weight.size(); ++i) {
    double gx = 0.0, gy = 0.0;
    for (int c = 0; c < nc; ++c) {
      gx += dx[i * nc + c];
      gy += dy[i * nc + c];
    }
    gx /= nc;
    gy /= nc;
    out.weight[i] = std::exp(-(gx * gx + gy * gy) * inv_s2);
  }
  return out;
}

Problem make_problem(std::vector<Image> observed, int factor, const EnergyParams& params) {
  Problem p;
  p.edge_weights.reserve(observed.size());
  for (const Image& b : observed) p.edge_weights.push_back(edge_weight(upsample_bicubic(b, factor), params.sigma_g));
  p.observed = std::move(observed);
  return p;
}

EnergyBreakdown EnergyBreakdown::from_frames(std::vector<FrameEnergy> frames) {
  EnergyBreakdown e;
  for (const FrameEnergy& f : frames) {
    e.matching += f.matching;
    e.self_consistency += f.self_consistency;
    e.regularization += f.regularization;
  }
  e.total = e.matching + e.self_consistency + e.regularization;
  e.frames = std::move(frames);
  return e;
}

std::string EnergyBreakdown::report() const {
  std::string out = "# edge_weight=gaussian_gradient\n";
  char buf[128];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const FrameEnergy& f = frames[t];
    std::snprintf(buf, sizeof(buf), "frame %zu matching %.17g\n", t, f.matching);
    out += buf;
    std::snprintf(buf, sizeof(buf), "frame %zu self_consistency %.17g\n", t, f.self_consistency);
    out += buf;
    std::snprintf(buf, sizeof(buf), "frame %zu regularization %.17g\n", t, f.regularization);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "sum matching %.17g\nsum self_consistency %.17g\n", matching,
                self_consistency);
  out += buf;
  std::snprintf(buf, sizeof(buf), "sum regularization %.17g\nsum total %.17g\n", regularization, total);
  out += buf;
  return out;
}

double masked_l1(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid,
                 const std::vector<std::uint8_t>& visible) {
  require(a.same_shape(b), ErrorCode::kDimensionMismatch, "masked_l1: shape mismatch");
  const int nc = a.channels();
  const auto da = a.data();
  const auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (!valid.empty() && !valid[i]) continue;
    if (!visible.empty() && !visible[i]) continue;
    for (int c = 0; c < nc; ++c) sum += std::abs(da[i * nc + c] - db[i * nc + c]);
  }
  return sum;
}

double image_tv(const Image& img) {
  const GradientField g = gradient(img);
  const int nc = img.channels();
  const auto dx = g.dx.data();
  const auto dy = g.dy.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    double sq = 0.0;
    for (int c = 0; c < nc; ++c) sq += dx[i * nc + c] * dx[i * nc + c] + dy[i * nc + c] * dy[i * nc + c];
    sum += std::sqrt(sq);
  }
  return sum;
}

double weighted_depth_tv(const InverseDepthMap& depth, const EdgeWeightMap& g) {
  require(g.width == depth.width() && g.height == depth.height(), ErrorCode::kDimensionMismatch,
          "edge weights do not match depth map");
  const int w = depth.width();
  const int h = depth.height();
  double sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = depth.at(x, y);
      const double dx = x + 1 < w ? depth.at(x + 1, y) - d : 0.0;
      const double dy = y + 1 < h ? depth.at(x, y + 1) - d : 0.0;
      sum += g.weight[static_cast<std::size_t>(y) * w + x] * std::sqrt(dx * dx + dy * dy);
    }
  return sum;
}

namespace {

double matching_from_samples(int t, const SequenceState& state, const Problem& problem,
                             const detail::IntermediateDepths& depths, const EnergyParams& params) {
  const auto& frame = state.frames[t];
  const Pose prev = state.previous_pose(t);
  double sum = 0.0;
  for (int s : state.neighbors(t, params.neighbor_radius)) {
    const auto samples = detail::capture_samples_with_depths(depths, frame.pose, prev, state.capture,
                                                             state.frames[s].pose);
    const CaptureResult pred =
        detail::apply_samples(state.frames[s].latent, samples, state.capture.factor);
    sum += masked_l1(problem.observed[t], pred.image, pred.valid, state.mask(t, s).visible);
  }
  return sum;
}

double self_from_samples(int t, const SequenceState& state, const Problem& problem,
                         const detail::IntermediateDepths& depths, const EnergyParams& params) {
  if (params.lambda_s == 0.0) return 0.0;
  const auto& frame = state.frames[t];
  const auto samples = detail::capture_samples_with_depths(depths, frame.pose, state.previous_pose(t),
                                                           state.capture, std::nullopt);
  const CaptureResult pred = detail::apply_samples(frame.latent, samples, state.capture.factor);
  return params.lambda_s * masked_l1(problem.observed[t], pred.image, pred.valid, {});
}

detail::IntermediateDepths depths_for(int t, const SequenceState& state) {
  const auto& f = state.frames[t];
  return detail::intermediate_depths(f.depth, f.pose, state.previous_pose(t), state.capture);
}

}  // namespace

double matching_term(int t, const SequenceState& state, const Problem& problem,
                     const EnergyParams& params) {
  return matching_from_samples(t, state, problem, depths_for(t, state), params);
}

double selfconsistency_term(int t, const SequenceState& state, const Problem& problem,
                            const EnergyParams& params) {
  if (params.lambda_s == 0.0) return 0.0;
  return self_from_samples(t, state, problem, depths_for(t, state), params);
}

double regularization_term(int t, const SequenceState& state, const Problem& problem,
                           const EnergyParams& params) {
  const auto& f = state.frames[t];
  double e = 0.0;
  if (params.lambda_d != 0.0) e += params.lambda_d * weighted_depth_tv(f.depth, problem.edge_weights[t]);
  if (params.lambda_i != 0.0) e += params.lambda_i * image_tv(f.latent);
  return e;
}

EnergyBreakdown total_energy(const SequenceState& state, const Problem& problem,
                             const EnergyParams& params) {
  require(static_cast<int>(problem.observed.size()) == state.size(), ErrorCode::kDimensionMismatch,
          "observation count differs from state frame count");
  std::vector<FrameEnergy> frames(state.size());
  for (int t = 0; t < state.size(); ++t) {
    const auto depths = depths_for(t, state);
    frames[t].matching = matching_from_samples(t, state, problem, depths, params);
    frames[t].self_consistency = self_from_samples(t, state, problem, depths, params);
    frames[t].regularization = regularization_term(t, state, problem, params);
  }
  return EnergyBreakdown::from_frames(std::move(frames));
}

}  // namespace jdsr
