#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

namespace jdsr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// se(3) coordinates ordered (v, omega): translational part first.
using Twist = Eigen::Matrix<double, 6, 1>;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;

  Vec2 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
  /// Ray through pixel x with unit z component.
  Vec3 ray(double x, double y) const { return {(x - cx) / fx, (y - cy) / fy, 1.0}; }

  /// Intrinsics of the grid obtained by box-downsampling with `factor`
  /// (fine x maps to coarse (x - (factor-1)/2) / factor).
  Intrinsics downscaled(int factor) const;
};

/// Rigid transform mapping world points into camera coordinates.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 transform(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  /// Camera center in world coordinates.
  Vec3 center() const { return -rotation.transpose() * translation; }

  bool is_valid(double tol = 1e-9) const;
};

Mat3 hat(const Vec3& w);

Pose se3_exp(const Twist& xi);
/// Throws kNearPiRotation when the rotation angle is within 1e-6 of pi.
Twist se3_log(const Pose& pose);

/// exp(alpha * log(P_t P_s^-1)) P_s.
Pose interpolate_pose(const Pose& pose_t, const Pose& pose_s, double alpha);

/// Per-pixel inverse depth (1 / scene unit), row-major. Values must be > 0.
class InverseDepthMap {
 public:
  InverseDepthMap() = default;
  InverseDepthMap(int width, int height, double fill);
  InverseDepthMap(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

struct WarpedPoint {
  Vec2 pixel;
  double depth = 0.0;  ///< z in the destination camera
};

/// Precomputed source-to-destination transfer P_dst P_src^-1 with shared K.
class RelativeWarp {
 public:
  RelativeWarp(const Pose& src, const Pose& dst, const Intrinsics& K);

  /// nullopt when the point lands at depth <= 1e-9 in the destination.
  std::optional<WarpedPoint> operator()(double x, double y, double inverse_depth) const;

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
  Intrinsics K_;
  bool identity_ = false;
};

/// Throws kBehindCamera when the destination depth is <= 1e-9, and
/// kInvalidArgument for non-positive inverse depth.
WarpedPoint warp_pixel(const Vec2& x, double inverse_depth, const Pose& src, const Pose& dst,
                       const Intrinsics& K);

/// Derivatives of u = W^{t->s}(x) with respect to the inverse depth at x and
/// to left-multiplied twists: P_t = exp(eps_t) P_t0, P_s = exp(eps_s) P_s0.
struct WarpJacobian {
  Vec2 du_dD = Vec2::Zero();
  Mat26 du_deps_t = Mat26::Zero();
  Mat26 du_deps_s = Mat26::Zero();
};

WarpJacobian warp_jacobians(const Vec2& x, double inverse_depth, const Pose& pose_t,
                            const Pose& pose_s, const Intrinsics& K);

/// Forward-splats `depth` (seen from pose_t) into the camera at pose_tau with a
/// z-buffer; remaining holes take the nearest valid value along the row, then
/// the nearest filled row.
InverseDepthMap warp_depth_map(const InverseDepthMap& depth, const Pose& pose_t,
                               const Pose& pose_tau, const Intrinsics& K);

}  // namespace jdsr
