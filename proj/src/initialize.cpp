#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "jdsr/error.hpp"
#include "jdsr/solver.hpp"

namespace jdsr {
namespace {

struct Level {
  int width = 0;
  int height = 0;
  Intrinsics K;
};

/// Pyramid from the observation grid (level 0) down to pyramid_min_dim.
std::vector<Level> build_levels(int width, int height, const Intrinsics& K,
                                const SolverConfig& config) {
  std::vector<Level> levels{{width, height, K}};
  for (double r = config.pyramid_factor;; r *= config.pyramid_factor) {
    const int w = static_cast<int>(std::lround(width * r));
    const int h = static_cast<int>(std::lround(height * r));
    if (std::min(w, h) < config.pyramid_min_dim) break;
    const double sx = static_cast<double>(w) / width;
    const double sy = static_cast<double>(h) / height;
    levels.push_back({w, h, {K.fx * sx, K.fy * sy, (K.cx + 0.5) * sx - 0.5, (K.cy + 0.5) * sy - 0.5}});
  }
  return levels;
}

/// Area-weighted resize: each output pixel averages 2x2 bilinear taps spread
/// over its footprint in the source grid.
Image resize(const Image& img, int width, int height) {
  if (img.width() == width && img.height() == height) return img;
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  Image out(width, height, img.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double cx = (x + 0.5) * sx - 0.5;
      const double cy = (y + 0.5) * sy - 0.5;
      const double ox = sx > 1.0 ? 0.25 * sx : 0.0;
      const double oy = sy > 1.0 ? 0.25 * sy : 0.0;
      std::array<double, 3> acc{};
      for (double dy : {-oy, oy})
        for (double dx : {-ox, ox}) {
          const ColorSample s = sample_bilinear(img, cx + dx, cy + dy);
          for (int c = 0; c < img.channels(); ++c) acc[c] += 0.25 * s.value[c];
        }
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = acc[c];
    }
  return out;
}

InverseDepthMap resize(const InverseDepthMap& d, int width, int height) {
  const Image img(d.width(), d.height(), 1, std::vector<double>(d.values().begin(), d.values().end()));
  const Image r = resize(img, width, height);
  return InverseDepthMap(width, height, std::vector<double>(r.data().begin(), r.data().end()));
}

std::vector<Pose> blur_poses(const Pose& pose, const Pose& prev, const CaptureModel& blur) {
  std::vector<Pose> out;
  const Twist delta = se3_log(pose * prev.inverse());
  for (double alpha : sample_times(blur, 1.0, 0.0))
    out.push_back(alpha == 1.0 ? pose : se3_exp(alpha * delta) * prev);
  return out;
}

/// Per-pixel, per-channel photometric evaluation of the initialization cost
/// together with the derivative of the transferred-blur sample of B_s with
/// respect to the warped position.
struct PixelTerm {
  bool ok = false;
  std::array<double, 3> residual{};
  std::array<Eigen::RowVector2d, 3> slope{Eigen::RowVector2d::Zero(), Eigen::RowVector2d::Zero(),
                                          Eigen::RowVector2d::Zero()};
};

class PairModel {
 public:
  PairModel(const Image& b_t, const Image& b_s, const PairGeometry& g, const CaptureModel& blur)
      : b_t_(b_t), b_s_(b_s), geometry_(g), K_(blur.K),
        taus_t_(blur_poses(g.pose_t, g.prev_t, blur)), taus_s_(blur_poses(g.pose_s, g.prev_s, blur)),
        grad_(internal::central_gradient(b_s)) {}

  PixelTerm evaluate(int x, int y, double d) const {
    PixelTerm out;
    const Vec3 X = K_.ray(x, y) / d;
    const Vec3 world = geometry_.pose_t.inverse().transform(X);
    const Vec3 in_s = geometry_.pose_s.transform(world);
    if (!(in_s.z() > 1e-9)) return out;
    const Vec2 xs = K_.project(in_s);
    const Vec2 xt(x, y);
    const double inv_m = 1.0 / taus_t_.size();
    const int nc = b_s_.channels();
    std::array<double, 3> lhs{}, rhs{};
    for (std::size_t m = 0; m < taus_t_.size(); ++m) {
      const Vec3 pt = taus_t_[m].transform(world);
      const Vec3 ps = taus_s_[m].transform(world);
      if (!(pt.z() > 1e-9) || !(ps.z() > 1e-9)) return out;
      const Vec2 a = xs + (xt - K_.project(pt));
      const Vec2 b = xt + (xs - K_.project(ps));
      const ColorSample sa = sample_bilinear(b_s_, a.x(), a.y());
      const ColorSample sb = sample_bilinear(b_t_, b.x(), b.y());
      if (!sa.in_bounds || !sb.in_bounds) return out;
      const ColorSample gx = sample_bilinear(grad_.dx, a.x(), a.y());
      const ColorSample gy = sample_bilinear(grad_.dy, a.x(), a.y());
      for (int c = 0; c < nc; ++c) {
        lhs[c] += sa.value[c];
        rhs[c] += sb.value[c];
        out.slope[c] += Eigen::RowVector2d(gx.value[c], gy.value[c]);
      }
    }
    out.ok = true;
    for (int c = 0; c < nc; ++c) {
      out.residual[c] = (lhs[c] - rhs[c]) * inv_m;
      out.slope[c] *= inv_m;
    }
    return out;
  }

  const PairGeometry& geometry() const { return geometry_; }
  const Intrinsics& K() const { return K_; }
  int channels() const { return b_s_.channels(); }

 private:
  const Image& b_t_;
  const Image& b_s_;
  PairGeometry geometry_;
  Intrinsics K_;
  std::vector<Pose> taus_t_;
  std::vector<Pose> taus_s_;
  GradientField grad_;
};

double depth_tv(const InverseDepthMap& D) {
  double sum = 0.0;
  for (int y = 0; y < D.height(); ++y)
    for (int x = 0; x < D.width(); ++x) {
      const double dx = x + 1 < D.width() ? D.at(x + 1, y) - D.at(x, y) : 0.0;
      const double dy = y + 1 < D.height() ? D.at(x, y + 1) - D.at(x, y) : 0.0;
      sum += std::sqrt(dx * dx + dy * dy);
    }
  return sum;
}

double pair_energy(const PairModel& model, const InverseDepthMap& D, double lambda_d) {
  double e = 0.0;
  for (int y = 0; y < D.height(); ++y)
    for (int x = 0; x < D.width(); ++x) {
      const PixelTerm p = model.evaluate(x, y, D.at(x, y));
      if (!p.ok) continue;
      for (int c = 0; c < model.channels(); ++c) e += std::abs(p.residual[c]);
    }
  return e + lambda_d * depth_tv(D);
}

struct PairResult {
  InverseDepthMap depth;
  Pose pose_t;
  double energy_start = 0.0;
  double energy_end = 0.0;
};

/// Gauss-Newton/IRLS refinement of depth (and optionally the pose of t) at
/// one pyramid level, with backtracking on the true cost.
PairResult refine_level(const Image& b_t, const Image& b_s, InverseDepthMap depth,
                        PairGeometry geometry, bool free_pose, const CaptureModel& blur,
                        const EnergyParams& params, const SolverConfig& config) {
  const int w = depth.width();
  const int h = depth.height();
  const std::size_t n = depth.size();
  const int pose_col = static_cast<int>(n);
  const int cols = static_cast<int>(n) + (free_pose ? 6 : 0);

  PairResult out{depth, geometry.pose_t, 0.0, 0.0};
  {
    const PairModel model(b_t, b_s, geometry, blur);
    out.energy_start = pair_energy(model, depth, params.lambda_d);
    out.energy_end = out.energy_start;
  }
  const CgOptions cg{config.cg_iters, config.cg_tol};
  for (int warp = 0; warp < config.init_warps; ++warp) {
    const PairModel model(b_t, b_s, geometry, blur);
    CsrMatrix J(cols);
    std::vector<double> rhs, scale;
    std::vector<int> group;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const PixelTerm term = model.evaluate(x, y, depth[p]);
        if (!term.ok) continue;
        const WarpJacobian jac =
            warp_jacobians(Vec2(x, y), depth[p], geometry.pose_t, geometry.pose_s, model.K());
        for (int c = 0; c < model.channels(); ++c) {
          J.add(static_cast<int>(p), term.slope[c] * jac.du_dD);
          if (free_pose) {
            const Eigen::Matrix<double, 1, 6> g = term.slope[c] * jac.du_deps_t;
            for (int j = 0; j < 6; ++j) J.add(pose_col + j, g[j]);
          }
          J.end_row();
          rhs.push_back(-term.residual[c]);
          scale.push_back(1.0);
          group.push_back(-1);
        }
      }
    if (params.lambda_d > 0)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          if (x + 1 < w) {
            J.add(static_cast<int>(p + 1), 1.0);
            J.add(static_cast<int>(p), -1.0);
            J.end_row();
            rhs.push_back(-(depth[p + 1] - depth[p]));
            scale.push_back(params.lambda_d);
            group.push_back(static_cast<int>(p));
          }
          if (y + 1 < h) {
            J.add(static_cast<int>(p + w), 1.0);
            J.add(static_cast<int>(p), -1.0);
            J.end_row();
            rhs.push_back(-(depth[p + w] - depth[p]));
            scale.push_back(params.lambda_d);
            group.push_back(static_cast<int>(p));
          }
        }

    std::vector<double> delta(cols, 0.0), lin(rhs.size()), weights(rhs.size());
    std::vector<double> mag(n);
    std::vector<ColumnBlock> blocks;
    if (free_pose) blocks.push_back({pose_col, 6});
    for (int it = 0; it < config.irls_inner; ++it) {
      J.multiply(delta, lin);
      std::fill(mag.begin(), mag.end(), 0.0);
      for (std::size_t r = 0; r < rhs.size(); ++r) {
        lin[r] = rhs[r] - lin[r];
        if (group[r] >= 0) mag[group[r]] += lin[r] * lin[r];
      }
      for (std::size_t r = 0; r < rhs.size(); ++r)
        weights[r] = internal::irls_weight(scale[r], group[r] >= 0 ? std::sqrt(mag[group[r]]) : lin[r],
                                           config.irls_epsilon);
      std::vector<double> damping = normal_diagonal(J, weights);
      for (double& d : damping) d = config.init_damping * d + 1e-12;
      solve_weighted_least_squares(J, weights, rhs, damping, delta, cg, blocks);
    }

    bool accepted = false;
    for (double step = 1.0; step >= 1.0 / 32; step *= 0.5) {
      InverseDepthMap cand = depth;
      for (std::size_t p = 0; p < n; ++p)
        cand[p] = std::clamp(depth[p] + step * delta[p], config.d_min, config.d_max);
      PairGeometry g = geometry;
      if (free_pose) {
        Twist e;
        for (int j = 0; j < 6; ++j) e[j] = step * delta[pose_col + j];
        if (!e.allFinite()) break;
        g.pose_t = se3_exp(e) * geometry.pose_t;
      }
      const double energy = pair_energy(PairModel(b_t, b_s, g, blur), cand, params.lambda_d);
      if (std::isfinite(energy) && energy <= out.energy_end) {
        depth = std::move(cand);
        geometry = g;
        out.energy_end = energy;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.depth = std::move(depth);
  out.pose_t = geometry.pose_t;
  return out;
}

}  // namespace

double initialization_energy(const Image& b_t, const Image& b_s, const InverseDepthMap& depth,
                             const PairGeometry& geometry, const CaptureModel& blur,
                             double lambda_d) {
  require(b_t.width() == depth.width() && b_t.height() == depth.height() && b_s.same_shape(b_t),
          ErrorCode::kDimensionMismatch, "initialization_energy: image and depth sizes differ");
  return pair_energy(PairModel(b_t, b_s, geometry, blur), depth, lambda_d);
}

SequenceState initialize(const Problem& problem, const std::vector<Pose>& seeds,
                         const CaptureModel& capture, const EnergyParams& params,
                         const SolverConfig& config, InitReport* report) {
  config.validate();
  params.validate();
  capture.validate();
  const int T = static_cast<int>(problem.observed.size());
  require(T >= 2, ErrorCode::kInvalidArgument, "initialization needs at least 2 frames");
  require(static_cast<int>(seeds.size()) >= std::min(std::max(config.seed_frames, 2), T),
          ErrorCode::kInvalidArgument, "not enough seed poses");
  const int f = capture.factor;
  const int lw = problem.observed[0].width();
  const int lh = problem.observed[0].height();
  for (const Image& b : problem.observed)
    require(b.width() == lw && b.height() == lh, ErrorCode::kDimensionMismatch,
            "observed frames differ in size");

  const auto levels = build_levels(lw, lh, capture.K.downscaled(f), config);
  std::vector<std::vector<Image>> pyramid(T);
  for (int t = 0; t < T; ++t) {
    for (const Level& L : levels) pyramid[t].push_back(resize(problem.observed[t], L.width, L.height));
  }

  std::vector<Pose> poses(T);
  for (int t = 0; t < T; ++t) {
    if (t < static_cast<int>(seeds.size())) poses[t] = seeds[t];
    else poses[t] = poses[t - 1] * poses[t - 2].inverse() * poses[t - 1];
  }
  std::vector<InverseDepthMap> lr_depth(T);
  InitReport local;

  const auto solve_frame = [&](int t, int s, bool free_pose, InverseDepthMap start) {
    InverseDepthMap depth = resize(start, levels.back().width, levels.back().height);
    for (int l = static_cast<int>(levels.size()) - 1; l >= 0; --l) {
      const Level& L = levels[l];
      if (depth.width() != L.width || depth.height() != L.height) depth = resize(depth, L.width, L.height);
      CaptureModel blur = capture;
      blur.K = L.K;
      blur.factor = 1;
      const PairGeometry g{poses[t], previous_pose(poses, t), poses[s], previous_pose(poses, s)};
      PairResult r = refine_level(pyramid[t][l], pyramid[s][l], std::move(depth), g, free_pose, blur,
                                  params, config);
      if (l == static_cast<int>(levels.size()) - 1 && r.energy_end > 10.0 * r.energy_start)
        local.diverged_frames.push_back(t);
      depth = std::move(r.depth);
      poses[t] = r.pose_t;
    }
    lr_depth[t] = std::move(depth);
  };

  const Intrinsics K0 = levels.front().K;
  solve_frame(1, 0, config.seed_frames < 2, InverseDepthMap(lw, lh, config.init_inverse_depth));
  solve_frame(0, 1, false, warp_depth_map(lr_depth[1], poses[1], poses[0], K0));
  for (int t = 2; t < T; ++t) {
    if (t >= static_cast<int>(seeds.size()) && t >= 3)
      poses[t] = poses[t - 1] * poses[t - 2].inverse() * poses[t - 1];
    solve_frame(t, t - 1, t >= config.seed_frames,
                warp_depth_map(lr_depth[t - 1], poses[t - 1], poses[t], K0));
  }

  SequenceState state;
  state.capture = capture;
  state.frames.resize(T);
  for (int t = 0; t < T; ++t) {
    auto& frame = state.frames[t];
    frame.latent = upsample_bicubic(problem.observed[t], f);
    const Image up = upsample_bicubic(
        Image(lw, lh, 1, std::vector<double>(lr_depth[t].values().begin(), lr_depth[t].values().end())), f);
    std::vector<double> d(up.data().begin(), up.data().end());
    for (double& v : d) v = std::clamp(v, config.d_min, config.d_max);
    frame.depth = InverseDepthMap(lw * f, lh * f, std::move(d));
    frame.pose = poses[t];
  }
  if (report) *report = std::move(local);
  return state;
}

}  // namespace jdsr
