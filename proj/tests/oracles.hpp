#pragma once

// Reference implementations written directly from the model definitions.
// They favour obviousness over speed and share no code with the library
// beyond its data types and warp_depth_map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <unsupported/Eigen/MatrixFunctions>

#include "jdsr/energy.hpp"
#include "jdsr/geometry.hpp"
#include "jdsr/image.hpp"
#include "jdsr/state.hpp"

namespace oracle {

using jdsr::Image;
using jdsr::InverseDepthMap;
using jdsr::Intrinsics;
using jdsr::Pose;
using jdsr::Twist;
using Mat4 = Eigen::Matrix4d;

inline Mat4 to_matrix(const Pose& p) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = p.rotation;
  m.topRightCorner<3, 1>() = p.translation;
  return m;
}

inline Pose from_matrix(const Mat4& m) {
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

inline Mat4 twist_matrix(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m(0, 1) = -xi(5);
  m(0, 2) = xi(4);
  m(1, 0) = xi(5);
  m(1, 2) = -xi(3);
  m(2, 0) = -xi(4);
  m(2, 1) = xi(3);
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

/// Matrix exponential of the 4x4 generator (Pade approximation in Eigen).
inline Pose exp(const Twist& xi) { return from_matrix(twist_matrix(xi).exp()); }

inline Pose interpolate(const Pose& pose_t, const Pose& pose_s, double alpha) {
  const Mat4 rel = to_matrix(pose_t) * to_matrix(pose_s).inverse();
  const Mat4 log_rel = rel.log();
  return from_matrix((alpha * log_rel).exp() * to_matrix(pose_s));
}

inline Twist random_twist(std::mt19937_64& rng, double max_norm) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Twist xi;
  for (int i = 0; i < 6; ++i) xi(i) = n(rng);
  return xi.normalized() * (max_norm * u(rng));
}

/// Unit-z-normalized pixel projection with an explicit behind-camera test.
inline std::optional<Eigen::Vector2d> transfer(const Intrinsics& K, double x, double y, double inv_depth,
                                               const Pose& src, const Pose& dst) {
  const Eigen::Vector3d cam((x - K.cx) / K.fx / inv_depth, (y - K.cy) / K.fy / inv_depth, 1.0 / inv_depth);
  const Eigen::Vector4d world = to_matrix(src).inverse() * cam.homogeneous();
  const Eigen::Vector4d q = to_matrix(dst) * world;
  if (q.z() <= 1e-9) return std::nullopt;
  return Eigen::Vector2d(K.fx * q.x() / q.z() + K.cx, K.fy * q.y() / q.z() + K.cy);
}

/// Bilinear read of channel c with coordinates clamped to the grid.
inline double bilinear(const Image& img, double x, double y, int c, bool* inside) {
  const int w = img.width(), h = img.height();
  *inside = x >= 0 && y >= 0 && x <= w - 1 && y <= h - 1;
  x = std::min(std::max(x, 0.0), w - 1.0);
  y = std::min(std::max(y, 0.0), h - 1.0);
  const int x0 = std::min(static_cast<int>(x), std::max(w - 2, 0));
  const int y0 = std::min(static_cast<int>(y), std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double ax = x - x0, ay = y - y0;
  return (1 - ax) * (1 - ay) * img.at(x0, y0, c) + ax * (1 - ay) * img.at(x1, y0, c) +
         (1 - ax) * ay * img.at(x0, y1, c) + ax * ay * img.at(x1, y1, c);
}

struct Capture {
  Image image;
  std::vector<std::uint8_t> valid;
};

/// Blur over M intermediate poses then f x f box averaging, evaluated one LR
/// pixel at a time. `image` lives in camera `image_pose` (frame t if absent).
inline Capture capture(const Image& image, const InverseDepthMap& depth_t, const Pose& pose_t,
                       const Pose& pose_prev, const Intrinsics& K, int samples, double exposure,
                       int factor, std::optional<Pose> image_pose = std::nullopt) {
  const Pose target = image_pose.value_or(pose_t);
  const int w = depth_t.width(), h = depth_t.height();
  const int lw = w / factor, lh = h / factor, nc = image.channels();
  std::vector<Pose> taus;
  std::vector<InverseDepthMap> depths;
  for (int m = 1; m <= samples; ++m) {
    const double alpha = 1.0 - exposure + exposure * m / samples;
    if (m == samples) {
      taus.push_back(pose_t);
      depths.push_back(depth_t);
    } else {
      taus.push_back(interpolate(pose_t, pose_prev, alpha));
      depths.push_back(jdsr::warp_depth_map(depth_t, pose_t, taus.back(), K));
    }
  }
  Capture out{Image(lw, lh, nc), std::vector<std::uint8_t>(static_cast<std::size_t>(lw) * lh, 1)};
  for (int Y = 0; Y < lh; ++Y)
    for (int X = 0; X < lw; ++X)
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int j = 0; j < factor; ++j)
          for (int i = 0; i < factor; ++i)
            for (int m = 0; m < samples; ++m) {
              const int x = X * factor + i, y = Y * factor + j;
              const bool identity = m == samples - 1 && !image_pose;
              const auto u = identity ? std::optional<Eigen::Vector2d>(Eigen::Vector2d(x, y))
                                      : transfer(K, x, y, depths[m].at(x, y), taus[m], target);
              if (!u) {
                out.valid[Y * lw + X] = 0;
                continue;
              }
              bool inside = false;
              acc += bilinear(image, u->x(), u->y(), c, &inside);
              if (!inside) out.valid[Y * lw + X] = 0;
            }
        out.image.at(X, Y, c) = acc / (samples * factor * factor);
      }
  return out;
}

inline double l1(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid,
                 const std::vector<std::uint8_t>* visible) {
  double sum = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * a.width() + x;
      if (!valid[i] || (visible && !(*visible)[i])) continue;
      for (int c = 0; c < a.channels(); ++c) sum += std::abs(a.at(x, y, c) - b.at(x, y, c));
    }
  return sum;
}

inline Pose previous(const jdsr::SequenceState& s, int t) {
  if (t > 0) return s.frames[t - 1].pose;
  const Mat4 p0 = to_matrix(s.frames[0].pose), p1 = to_matrix(s.frames[1].pose);
  return from_matrix(p0 * p1.inverse() * p0);
}

inline double matching(int t, const jdsr::SequenceState& s, const jdsr::Problem& p,
                       const jdsr::EnergyParams& params) {
  const auto& m = s.capture;
  double sum = 0.0;
  for (int n = t - params.neighbor_radius; n <= t + params.neighbor_radius; ++n) {
    if (n < 0 || n >= s.size() || n == t) continue;
    const Capture c = capture(s.frames[n].latent, s.frames[t].depth, s.frames[t].pose, previous(s, t), m.K,
                              m.samples, m.exposure_fraction, m.factor, s.frames[n].pose);
    const auto it = s.frames[t].visibility.find(n);
    sum += l1(p.observed[t], c.image, c.valid, it == s.frames[t].visibility.end() ? nullptr : &it->second.visible);
  }
  return sum;
}

inline double self_consistency(int t, const jdsr::SequenceState& s, const jdsr::Problem& p,
                               const jdsr::EnergyParams& params) {
  const auto& m = s.capture;
  const Capture c = capture(s.frames[t].latent, s.frames[t].depth, s.frames[t].pose, previous(s, t), m.K,
                            m.samples, m.exposure_fraction, m.factor);
  return params.lambda_s * l1(p.observed[t], c.image, c.valid, nullptr);
}

/// Forward differences, zero across the last row and column.
inline double regularization(int t, const jdsr::SequenceState& s, const jdsr::Problem& p,
                             const jdsr::EnergyParams& params) {
  const InverseDepthMap& d = s.frames[t].depth;
  const Image& img = s.frames[t].latent;
  const int w = d.width(), h = d.height();
  double depth_tv = 0.0, image_tv = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ddx = x + 1 < w ? d.at(x + 1, y) - d.at(x, y) : 0.0;
      const double ddy = y + 1 < h ? d.at(x, y + 1) - d.at(x, y) : 0.0;
      depth_tv += p.edge_weights[t].weight[y * w + x] * std::hypot(ddx, ddy);
      double sq = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        const double gx = x + 1 < w ? img.at(x + 1, y, c) - img.at(x, y, c) : 0.0;
        const double gy = y + 1 < h ? img.at(x, y + 1, c) - img.at(x, y, c) : 0.0;
        sq += gx * gx + gy * gy;
      }
      image_tv += std::sqrt(sq);
    }
  return params.lambda_d * depth_tv + params.lambda_i * image_tv;
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int nc) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, nc);
  for (double& v : img.data()) v = u(rng);
  return img;
}

/// Smooth random inverse depth in [lo, hi]: a random plane plus a bump.
inline InverseDepthMap random_depth(std::mt19937_64& rng, int w, int h, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = u(rng), b = u(rng), bx = u(rng) * w, by = u(rng) * h, amp = u(rng);
  InverseDepthMap d(w, h, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r2 = ((x - bx) * (x - bx) + (y - by) * (y - by)) / (0.1 * w * w);
      const double v = (a * x / w + b * y / h) / 2.0 * (1.0 - amp) + amp * std::exp(-r2);
      d.at(x, y) = lo + (hi - lo) * std::clamp(v, 0.0, 1.0);
    }
  return d;
}

struct RandomScene {
  jdsr::SequenceState state;
  jdsr::Problem problem;
  jdsr::EnergyParams params;
};

/// Three-frame 16x12 colour state with random masks and edge weights.
inline RandomScene random_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomScene r;
  auto& s = r.state;
  s.capture.K = {20.0, 20.0, 7.5, 5.5};
  s.capture.samples = 3;
  s.capture.exposure_fraction = 0.5;
  s.capture.factor = 2;
  const int w = 16, h = 12, T = 3;
  Pose pose = Pose::identity();
  for (int t = 0; t < T; ++t) {
    jdsr::FrameState f;
    f.latent = random_image(rng, w, h, 3);
    f.depth = random_depth(rng, w, h, 0.4, 0.7);
    f.pose = pose;
    pose = exp(random_twist(rng, 0.04)) * pose;
    s.frames.push_back(std::move(f));
  }
  for (int t = 0; t < T; ++t) {
    for (int n = std::max(0, t - 1); n <= std::min(T - 1, t + 1); ++n) {
      if (n == t) continue;
      jdsr::VisibilityMask mask{w / 2, h / 2, {}};
      for (int i = 0; i < w * h / 4; ++i) mask.visible.push_back(u(rng) < 0.8);
      s.frames[t].visibility[n] = mask;
    }
    r.problem.observed.push_back(random_image(rng, w / 2, h / 2, 3));
    jdsr::EdgeWeightMap g{w, h, {}};
    for (int i = 0; i < w * h; ++i) g.weight.push_back(0.05 + 0.95 * u(rng));
    r.problem.edge_weights.push_back(g);
  }
  r.params.lambda_s = 1.0 + 40.0 * u(rng);
  r.params.lambda_d = 10.0 * u(rng);
  r.params.lambda_i = u(rng);
  return r;
}

}  // namespace oracle
