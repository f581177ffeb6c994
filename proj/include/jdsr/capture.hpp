#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "jdsr/geometry.hpp"
#include "jdsr/image.hpp"

namespace jdsr {

/// Parameters of the capture operator: intrinsics of the latent (HR) grid,
/// number of intermediate poses M, shutter-open fraction of the inter-frame
/// interval, and the box-downsampling factor.
struct CaptureModel {
  Intrinsics K;
  int samples = 50;
  double exposure_fraction = 0.5;
  int factor = 2;

  void validate() const;
};

/// Interpolation parameters alpha_m = (tau_m - s) / (t - s), m = 1..M, with
/// tau_m = (m/M)(t_c - t_o) + t_o, t_c = t and t_o = t - exposure (t - s).
std::vector<double> sample_times(const CaptureModel& model, double t, double s);

struct Triplet {
  int row = 0;
  int col = 0;
  double weight = 0.0;
};

/// Compressed-row sparse matrix.
class SparseLinearOperator {
 public:
  SparseLinearOperator() = default;
  SparseLinearOperator(int rows, int cols, std::vector<std::size_t> row_ptr, std::vector<int> col,
                       std::vector<double> val);
  static SparseLinearOperator from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseLinearOperator identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return val_.size(); }

  std::span<const int> row_cols(int r) const {
    return {col_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_weights(int r) const {
    return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<Triplet> triplets() const;
  /// `row col weight` per line.
  void write_triplets(std::ostream& out) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
};

/// Transpose application; throws kDimensionMismatch when sizes disagree.
std::vector<double> apply_adjoint(const SparseLinearOperator& op, std::span<const double> residual);

/// LR image plus per-LR-pixel validity: a pixel is valid only when all of its
/// M * factor^2 samples were in front of the camera and inside the image.
struct CaptureResult {
  Image image;
  std::vector<std::uint8_t> valid;
};

struct CaptureOperator {
  SparseLinearOperator matrix;
  std::vector<std::uint8_t> valid;
};

/// Blur of frame t (interpolating from the previous frame's pose) followed by
/// box downsampling. `image_pose` names the camera the HR image I belongs to;
/// when absent I lives in frame t. With image_pose = P_s this realizes the
/// composite of the capture operator of t with the warp from t to s.
CaptureResult apply_capture(const Image& image, const InverseDepthMap& depth_t, const Pose& pose_t,
                            const Pose& pose_prev, const CaptureModel& model,
                            const std::optional<Pose>& image_pose = std::nullopt);

/// Same operator as an explicit matrix over the flattened single-channel HR
/// image; rows index LR pixels.
CaptureOperator build_capture_operator(const InverseDepthMap& depth_t, const Pose& pose_t,
                                       const Pose& pose_prev, const CaptureModel& model,
                                       const std::optional<Pose>& image_pose = std::nullopt);

/// Applies a single-channel operator to every channel of `image`.
Image apply_operator(const SparseLinearOperator& op, const Image& image, int out_width,
                     int out_height);

namespace detail {

/// Continuous sample positions of every HR pixel of every intermediate view,
/// expressed in the image camera. ok = 0 marks points behind that camera.
struct CaptureSamples {
  int width = 0;
  int height = 0;
  int count = 0;  ///< M
  std::vector<Vec2> position;  ///< count * width * height
  std::vector<std::uint8_t> ok;
};

CaptureSamples capture_samples(const InverseDepthMap& depth_t, const Pose& pose_t,
                               const Pose& pose_prev, const CaptureModel& model,
                               const std::optional<Pose>& image_pose);

/// Intermediate depth maps reused across pose perturbations.
struct IntermediateDepths {
  std::vector<double> alphas;
  std::vector<InverseDepthMap> depths;
};

IntermediateDepths intermediate_depths(const InverseDepthMap& depth_t, const Pose& pose_t,
                                       const Pose& pose_prev, const CaptureModel& model);

CaptureSamples capture_samples_with_depths(const IntermediateDepths& depths, const Pose& pose_t,
                                           const Pose& pose_prev, const CaptureModel& model,
                                           const std::optional<Pose>& image_pose);

CaptureResult apply_samples(const Image& image, const CaptureSamples& samples, int factor);

}  // namespace detail

}  // namespace jdsr
