#pragma once

// Randomized property suites shared by the unit tests (small counts) and the
// acceptance binary (full counts). Each returns the worst error it saw.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "jdsr/capture.hpp"
#include "jdsr/energy.hpp"
#include "jdsr/geometry.hpp"
#include "jdsr/synth.hpp"
#include "jdsr/visibility.hpp"
#include "oracles.hpp"

namespace suites {

using namespace jdsr;

inline double max_abs(const Pose& a, const Pose& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

struct GeometryErrors {
  double exp_log = 0.0;   ///< |log(exp(xi)) - xi| and |exp(log(P)) - P|
  double endpoints = 0.0;  ///< interpolate_pose at alpha 0 and 1
  double warp_roundtrip = 0.0;
};

inline Twist twist_with_angle(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 axis(n(rng), n(rng), n(rng));
  Vec3 v(n(rng), n(rng), n(rng));
  Twist xi;
  xi.head<3>() = v;
  xi.tail<3>() = axis.normalized() * (max_angle * u(rng));
  return xi;
}

inline GeometryErrors geometry_suite(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Intrinsics K{100.0, 100.0, 63.5, 47.5};
  GeometryErrors e;
  for (int i = 0; i < count; ++i) {
    const Twist xi = twist_with_angle(rng, std::numbers::pi - 1e-3);
    const Pose P = se3_exp(xi);
    e.exp_log = std::max(e.exp_log, (se3_log(P) - xi).cwiseAbs().maxCoeff());
    e.exp_log = std::max(e.exp_log, max_abs(se3_exp(se3_log(P)), P));

    const Pose Q = se3_exp(twist_with_angle(rng, std::numbers::pi - 1e-3));
    e.endpoints = std::max(e.endpoints, max_abs(interpolate_pose(P, Q, 0.0), Q));
    e.endpoints = std::max(e.endpoints, max_abs(interpolate_pose(P, Q, 1.0), P));

    const Pose src = se3_exp(0.3 * twist_with_angle(rng, 0.5));
    const Pose dst = se3_exp(0.3 * twist_with_angle(rng, 0.5));
    const Vec2 x(128 * u(rng), 96 * u(rng));
    const double d = 0.2 + 1.8 * u(rng);
    const RelativeWarp there(src, dst, K);
    const auto p = there(x.x(), x.y(), d);
    if (!p) continue;
    const WarpedPoint back = warp_pixel(p->pixel, 1.0 / p->depth, dst, src, K);
    e.warp_roundtrip = std::max(e.warp_roundtrip, (back.pixel - x).cwiseAbs().maxCoeff());
    e.warp_roundtrip = std::max(e.warp_roundtrip, std::abs(back.depth - 1.0 / d) * d);
  }
  return e;
}

/// Frobenius-relative error of each Jacobian block against central
/// differences of the oracle projection.
inline double jacobian_suite(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Intrinsics K{100.0, 100.0, 63.5, 47.5};
  const double h = 1e-6;
  double worst = 0.0;
  int done = 0;
  while (done < count) {
    const Pose pt = oracle::exp(oracle::random_twist(rng, 0.3));
    const Pose ps = oracle::exp(oracle::random_twist(rng, 0.3)) * pt;
    const Vec2 x(128 * u(rng), 96 * u(rng));
    const double d = 0.3 + 1.5 * u(rng);
    const auto base = oracle::transfer(K, x.x(), x.y(), d, pt, ps);
    if (!base) continue;
    const WarpJacobian J = warp_jacobians(x, d, pt, ps, K);

    auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& fd) {
      return (a - fd).norm() / std::max(fd.norm(), 1e-12);
    };
    const auto plus_d = oracle::transfer(K, x.x(), x.y(), d + h, pt, ps);
    const auto minus_d = oracle::transfer(K, x.x(), x.y(), d - h, pt, ps);
    if (!plus_d || !minus_d) continue;
    const Eigen::Vector2d fd_d = (*plus_d - *minus_d) / (2 * h);
    Mat26 fd_t, fd_s;
    bool ok = true;
    for (int j = 0; j < 6; ++j) {
      Twist e = Twist::Zero();
      e(j) = h;
      const auto tp = oracle::transfer(K, x.x(), x.y(), d, oracle::exp(e) * pt, ps);
      const auto tm = oracle::transfer(K, x.x(), x.y(), d, oracle::exp(-e) * pt, ps);
      const auto sp = oracle::transfer(K, x.x(), x.y(), d, pt, oracle::exp(e) * ps);
      const auto sm = oracle::transfer(K, x.x(), x.y(), d, pt, oracle::exp(-e) * ps);
      if (!tp || !tm || !sp || !sm) {
        ok = false;
        break;
      }
      fd_t.col(j) = (*tp - *tm) / (2 * h);
      fd_s.col(j) = (*sp - *sm) / (2 * h);
    }
    if (!ok) continue;
    worst = std::max({worst, rel(J.du_dD, fd_d), rel(J.du_deps_t, fd_t), rel(J.du_deps_s, fd_s)});
    ++done;
  }
  return worst;
}

struct OperatorErrors {
  double apply_vs_matrix = 0.0;
  int mask_mismatches = 0;
  double dot_test = 0.0;
  double row_sum = 0.0;
  int valid_rows = 0;
};

struct RandomCapture {
  InverseDepthMap depth;
  Pose pose_t, pose_prev;
  std::optional<Pose> image_pose;
  CaptureModel model;
};

inline RandomCapture random_capture(std::mt19937_64& rng, int size, bool warped) {
  RandomCapture c;
  c.model.K = {size * 1.2, size * 1.2, (size - 1) / 2.0, (size - 1) / 2.0};
  c.model.samples = 4;
  c.model.factor = 2;
  c.model.exposure_fraction = 0.5;
  c.depth = oracle::random_depth(rng, size, size, 0.5, 1.0);
  c.pose_t = oracle::exp(oracle::random_twist(rng, 0.2));
  c.pose_prev = oracle::exp(oracle::random_twist(rng, 0.04)) * c.pose_t;
  if (warped) c.image_pose = oracle::exp(oracle::random_twist(rng, 0.04)) * c.pose_t;
  return c;
}

inline OperatorErrors operator_suite(int images, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  OperatorErrors e;
  for (int i = 0; i < images; ++i) {
    const RandomCapture c = random_capture(rng, 16, i % 2 == 1);
    const Image img = oracle::random_image(rng, 16, 16, 1);
    const CaptureResult direct = apply_capture(img, c.depth, c.pose_t, c.pose_prev, c.model, c.image_pose);
    const CaptureOperator op = build_capture_operator(c.depth, c.pose_t, c.pose_prev, c.model, c.image_pose);
    const std::vector<double> y = op.matrix.apply(img.channel(0));
    for (std::size_t r = 0; r < y.size(); ++r)
      e.apply_vs_matrix = std::max(e.apply_vs_matrix, std::abs(y[r] - direct.image.data()[r]));
    for (std::size_t r = 0; r < y.size(); ++r) e.mask_mismatches += direct.valid[r] != op.valid[r];
    for (int r = 0; r < op.matrix.rows(); ++r) {
      if (!op.valid[r]) continue;
      double sum = 0.0;
      for (double w : op.matrix.row_weights(r)) sum += w;
      e.row_sum = std::max(e.row_sum, std::abs(sum - 1.0));
      ++e.valid_rows;
    }
  }
  const RandomCapture c = random_capture(rng, 16, true);
  const CaptureOperator op = build_capture_operator(c.depth, c.pose_t, c.pose_prev, c.model, c.image_pose);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < pairs; ++k) {
    std::vector<double> x(op.matrix.cols()), y(op.matrix.rows());
    for (double& v : x) v = n(rng);
    for (double& v : y) v = n(rng);
    const std::vector<double> ax = op.matrix.apply(x);
    const std::vector<double> aty = apply_adjoint(op.matrix, y);
    long double lhs = 0, rhs = 0;
    for (std::size_t r = 0; r < y.size(); ++r) lhs += static_cast<long double>(ax[r]) * y[r];
    for (std::size_t q = 0; q < x.size(); ++q) rhs += static_cast<long double>(x[q]) * aty[q];
    e.dot_test = std::max(e.dot_test, static_cast<double>(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300L)));
  }
  return e;
}

struct EnergyErrors {
  double terms = 0.0;       ///< relative, per frame and term
  double additivity = 0.0;  ///< relative
};

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

inline EnergyErrors energy_suite(int states, std::uint64_t seed) {
  EnergyErrors e;
  for (int k = 0; k < states; ++k) {
    const oracle::RandomScene r = oracle::random_scene(seed + k);
    double oracle_total = 0.0;
    const EnergyBreakdown b = total_energy(r.state, r.problem, r.params);
    for (int t = 0; t < r.state.size(); ++t) {
      const double m = oracle::matching(t, r.state, r.problem, r.params);
      const double s = oracle::self_consistency(t, r.state, r.problem, r.params);
      const double g = oracle::regularization(t, r.state, r.problem, r.params);
      oracle_total += m + s + g;
      e.terms = std::max({e.terms, relative(matching_term(t, r.state, r.problem, r.params), m),
                          relative(selfconsistency_term(t, r.state, r.problem, r.params), s),
                          relative(regularization_term(t, r.state, r.problem, r.params), g),
                          relative(b.frames[t].matching, m), relative(b.frames[t].self_consistency, s),
                          relative(b.frames[t].regularization, g)});
      e.additivity = std::max(e.additivity, relative(b.frames[t].total(), m + s + g));
    }
    e.additivity = std::max({e.additivity, relative(b.total, oracle_total),
                             relative(b.total, b.matching + b.self_consistency + b.regularization)});
  }
  return e;
}

struct VisibilityAgreement {
  int pixels = 0;
  int occluded = 0;  ///< analytically hidden or out of view
  int raw_disagreements = 0;
  int dilated_disagreements = 0;
};

/// Frame 0 of the two-plane scene against frame 1. A pixel is truly visible
/// when it projects inside frame 1 and the segment from frame 1's center to
/// its surface point misses the foreground rectangle. Disagreements survive
/// dilation only when no pixel of the 3x3 neighbourhood carries the mask's
/// label in the analytic map.
inline VisibilityAgreement visibility_suite() {
  const SceneSpec spec = two_plane_spec();
  const GroundTruthBundle gt = render_scene(spec);
  const CaptureModel model = capture_model_for(spec, 1);
  const VisibilityMask mask = compute_visibility(gt.depth[0], gt.poses[0], gt.poses[1], model);
  const int w = spec.width, h = spec.height;
  const double zf = 1.0 / spec.foreground_inverse_depth, zb = 1.0 / spec.background_inverse_depth;
  const auto& rect = spec.foreground_rect;
  const auto in_rect = [&](const Vec3& p) { return p.x() >= rect[0] && p.x() <= rect[1] && p.y() >= rect[2] && p.y() <= rect[3]; };
  const Pose c0 = gt.poses[0], c1 = gt.poses[1];
  const Vec3 center1 = c1.center();
  std::vector<int> truth(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 dir = c0.rotation.transpose() * spec.K.ray(x, y);
      const Vec3 o = c0.center();
      const Vec3 front = o + dir * ((zf - o.z()) / dir.z());
      const bool fg = in_rect(front);
      const Vec3 p = fg ? front : Vec3(o + dir * ((zb - o.z()) / dir.z()));
      bool visible = true;
      if (!fg) {
        const Vec3 seg = p - center1;
        const Vec3 hit = center1 + seg * ((zf - center1.z()) / seg.z());
        visible = !in_rect(hit);
      }
      const Vec2 u = spec.K.project(c1.transform(p));
      const double cx = std::floor(u.x() + 0.5), cy = std::floor(u.y() + 0.5);
      if (cx < 0 || cy < 0 || cx > w - 1 || cy > h - 1) visible = false;
      truth[y * w + x] = visible;
    }
  VisibilityAgreement a;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ++a.pixels;
      a.occluded += !truth[y * w + x];
      const int m = mask.visible[y * w + x];
      if (m == truth[y * w + x]) continue;
      ++a.raw_disagreements;
      bool explained = false;
      for (int j = std::max(0, y - 1); j <= std::min(h - 1, y + 1); ++j)
        for (int i = std::max(0, x - 1); i <= std::min(w - 1, x + 1); ++i) explained |= truth[j * w + i] == m;
      a.dilated_disagreements += !explained;
    }
  return a;
}

}  // namespace suites
