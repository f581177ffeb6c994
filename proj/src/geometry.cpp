#include "jdsr/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {
namespace {

constexpr double kSmallAngle = 1e-8;
// Below this angle the V / V^-1 coefficients switch to series to avoid
// cancellation in (theta - sin theta) and 1 - (theta/2) cot(theta/2).
constexpr double kSeriesAngle = 1e-3;
constexpr double kMinDepth = 1e-9;

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

}  // namespace

void Intrinsics::validate() const {
  require(fx > 0 && fy > 0 && std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
              std::isfinite(cy),
          ErrorCode::kInvalidArgument, "intrinsics require finite fx, fy > 0");
}

Intrinsics Intrinsics::downscaled(int factor) const {
  const double shift = (factor - 1) / 2.0;
  return {fx / factor, fy / factor, (cx - shift) / factor, (cy - shift) / factor};
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Pose se3_exp(const Twist& xi) {
  const Vec3 v = xi.head<3>();
  const Vec3 w = xi.tail<3>();
  const double theta = w.norm();
  const Mat3 W = hat(w);
  const Mat3 W2 = W * W;
  double a, b, c;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double half_sin = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * half_sin * half_sin / (theta * theta);
    if (theta < kSeriesAngle) {
      const double t2 = theta * theta;
      c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    } else {
      c = (theta - std::sin(theta)) / (theta * theta * theta);
    }
  }
  Pose p;
  p.rotation = Mat3::Identity() + a * W + b * W2;
  const Mat3 V = Mat3::Identity() + b * W + c * W2;
  p.translation = V * v;
  return p;
}

Twist se3_log(const Pose& pose) {
  const Mat3& R = pose.rotation;
  const Vec3 axis_sin = 0.5 * vee(R - R.transpose());
  const double s = axis_sin.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);
  require(theta < std::numbers::pi - 1e-6, ErrorCode::kNearPiRotation,
          "se3_log: rotation angle " + std::to_string(theta) + " too close to pi");

  Vec3 w;
  if (theta < kSmallAngle) {
    w = (1.0 + theta * theta / 6.0) * axis_sin;
  } else {
    w = (theta / s) * axis_sin;
  }
  const Mat3 W = hat(w);
  double coef;
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    coef = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    coef = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Mat3 V_inv = Mat3::Identity() - 0.5 * W + coef * W * W;
  Twist xi;
  xi.head<3>() = V_inv * pose.translation;
  xi.tail<3>() = w;
  return xi;
}

Pose interpolate_pose(const Pose& pose_t, const Pose& pose_s, double alpha) {
  const Twist delta = se3_log(pose_t * pose_s.inverse());
  return se3_exp(alpha * delta) * pose_s;
}

InverseDepthMap::InverseDepthMap(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * height, fill) {
  require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument, "negative depth map size");
}

InverseDepthMap::InverseDepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  require(values_.size() == static_cast<std::size_t>(width) * height,
          ErrorCode::kDimensionMismatch, "depth map data length mismatch");
}

RelativeWarp::RelativeWarp(const Pose& src, const Pose& dst, const Intrinsics& K) : K_(K) {
  const Pose rel = dst * src.inverse();
  rotation_ = rel.rotation;
  translation_ = rel.translation;
  identity_ = rotation_ == Mat3::Identity() && translation_.isZero(0.0);
}

std::optional<WarpedPoint> RelativeWarp::operator()(double x, double y, double inverse_depth) const {
  if (identity_) {
    if (!(1.0 / inverse_depth > kMinDepth)) return std::nullopt;
    return WarpedPoint{Vec2(x, y), 1.0 / inverse_depth};
  }
  const Vec3 p_src = K_.ray(x, y) / inverse_depth;
  const Vec3 p_dst = rotation_ * p_src + translation_;
  if (!(p_dst.z() > kMinDepth)) return std::nullopt;
  return WarpedPoint{K_.project(p_dst), p_dst.z()};
}

WarpedPoint warp_pixel(const Vec2& x, double inverse_depth, const Pose& src, const Pose& dst,
                       const Intrinsics& K) {
  require(inverse_depth > 0 && std::isfinite(inverse_depth), ErrorCode::kInvalidArgument,
          "warp_pixel: inverse depth must be positive");
  const auto out = RelativeWarp(src, dst, K)(x.x(), x.y(), inverse_depth);
  require(out.has_value(), ErrorCode::kBehindCamera, "warp_pixel: point behind destination camera");
  return *out;
}

WarpJacobian warp_jacobians(const Vec2& x, double inverse_depth, const Pose& pose_t,
                            const Pose& pose_s, const Intrinsics& K) {
  require(inverse_depth > 0 && std::isfinite(inverse_depth), ErrorCode::kInvalidArgument,
          "warp_jacobians: inverse depth must be positive");
  const RelativeWarp warp(pose_t, pose_s, K);
  const Vec3 p_t = K.ray(x.x(), x.y()) / inverse_depth;
  const Vec3 p_s = warp.rotation() * p_t + warp.translation();
  require(p_s.z() > kMinDepth, ErrorCode::kBehindCamera, "warp_jacobians: point behind camera");

  const double iz = 1.0 / p_s.z();
  Eigen::Matrix<double, 2, 3> proj;
  proj << K.fx * iz, 0.0, -K.fx * p_s.x() * iz * iz, 0.0, K.fy * iz, -K.fy * p_s.y() * iz * iz;

  WarpJacobian J;
  J.du_dD = proj * (warp.rotation() * (-p_t / inverse_depth));

  // exp(eps) p ~ p + v + omega x p  =>  d/d(v, omega) = [I, -hat(p)]
  Mat36 dps;
  dps.leftCols<3>() = Mat3::Identity();
  dps.rightCols<3>() = -hat(p_s);
  J.du_deps_s = proj * dps;

  // P_t^-1 = P_t0^-1 exp(-eps_t): the source point is perturbed by -eps_t
  Mat36 dpt;
  dpt.leftCols<3>() = Mat3::Identity();
  dpt.rightCols<3>() = -hat(p_t);
  J.du_deps_t = proj * (-warp.rotation() * dpt);
  return J;
}

namespace {

void fill_holes(std::vector<double>& values, std::vector<char>& valid, int width, int height,
                double fallback) {
  // Row pass: nearest valid sample in the same row, ties to the left.
  std::vector<char> row_has(height, 0);
  for (int y = 0; y < height; ++y) {
    double* row = values.data() + static_cast<std::size_t>(y) * width;
    const char* ok = valid.data() + static_cast<std::size_t>(y) * width;
    std::vector<int> left(width, -1), right(width, -1);
    int last = -1;
    for (int x = 0; x < width; ++x) {
      if (ok[x]) last = x;
      left[x] = last;
    }
    last = -1;
    for (int x = width - 1; x >= 0; --x) {
      if (ok[x]) last = x;
      right[x] = last;
    }
    if (left[width - 1] < 0) continue;
    row_has[y] = 1;
    std::vector<double> filled(row, row + width);
    for (int x = 0; x < width; ++x) {
      if (ok[x]) continue;
      const int l = left[x], r = right[x];
      int src;
      if (l < 0) src = r;
      else if (r < 0) src = l;
      else src = (x - l <= r - x) ? l : r;
      filled[x] = row[src];
    }
    std::copy(filled.begin(), filled.end(), row);
  }
  // Column pass over whole rows that had no valid sample, ties upward.
  std::vector<double> snapshot = values;
  for (int y = 0; y < height; ++y) {
    if (row_has[y]) continue;
    int src = -1;
    for (int dist = 1; dist < height && src < 0; ++dist) {
      if (y - dist >= 0 && row_has[y - dist]) src = y - dist;
      else if (y + dist < height && row_has[y + dist]) src = y + dist;
    }
    for (int x = 0; x < width; ++x) {
      values[static_cast<std::size_t>(y) * width + x] =
          src < 0 ? fallback : snapshot[static_cast<std::size_t>(src) * width + x];
    }
  }
  std::fill(valid.begin(), valid.end(), 1);
}

}  // namespace

InverseDepthMap warp_depth_map(const InverseDepthMap& depth, const Pose& pose_t,
                               const Pose& pose_tau, const Intrinsics& K) {
  const int w = depth.width();
  const int h = depth.height();
  const RelativeWarp warp(pose_t, pose_tau, K);
  std::vector<double> out(depth.size(), 0.0);
  std::vector<char> valid(depth.size(), 0);
  double sum = 0.0;
  // Sequential row-major splat: a later source only wins with a strictly
  // nearer surface, so ties keep the smaller source index.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = depth.at(x, y);
      sum += d;
      const auto p = warp(x, y, d);
      if (!p) continue;
      const double tx = std::floor(p->pixel.x() + 0.5);
      const double ty = std::floor(p->pixel.y() + 0.5);
      if (tx < 0 || ty < 0 || tx > w - 1 || ty > h - 1) continue;
      const std::size_t idx = static_cast<std::size_t>(ty) * w + static_cast<std::size_t>(tx);
      const double inv = 1.0 / p->depth;
      if (!valid[idx] || inv > out[idx]) {
        out[idx] = inv;
        valid[idx] = 1;
      }
    }
  const double fallback = depth.size() ? sum / static_cast<double>(depth.size()) : 1.0;
  fill_holes(out, valid, w, h, fallback);
  return InverseDepthMap(w, h, std::move(out));
}

}  // namespace jdsr
