#pragma once

#include <string>
#include <vector>

#include "jdsr/geometry.hpp"
#include "jdsr/image.hpp"

namespace jdsr {

struct DepthError {
  double psnr = 0.0;  ///< on scaled inverse depth, peak = max ground truth
  double rel = 0.0;   ///< mean |scale * est - gt| / gt
  double scale = 1.0;
};

/// Both maps are center-cropped to crop_fraction of each side and the
/// estimate is scaled by the least-squares factor before measuring.
DepthError depth_error(const InverseDepthMap& est, const InverseDepthMap& gt,
                       double crop_fraction = 0.7);

/// RMSE of camera centers after the least-squares similarity alignment of
/// the estimated onto the true trajectory.
double trajectory_error(const std::vector<Pose>& est, const std::vector<Pose>& gt);

std::vector<double> latent_psnr(const std::vector<Image>& est, const std::vector<Image>& gt);

struct EvalReport {
  std::string method = "estimate";
  std::vector<double> image_psnr;
  std::vector<double> depth_psnr;
  std::vector<double> depth_rel;
  double ate = 0.0;
  double mean_image_psnr = 0.0;
  double mean_depth_psnr = 0.0;
  double mean_depth_rel = 0.0;

  /// Flags conventions, then one line per frame and the averages.
  std::string text() const;
  static std::string csv_header();
  /// Per-frame rows plus a `mean` row.
  std::string csv_rows() const;
};

EvalReport evaluate(const std::vector<Image>& latent, const std::vector<InverseDepthMap>& depth,
                    const std::vector<Pose>& poses, const std::vector<Image>& gt_latent,
                    const std::vector<InverseDepthMap>& gt_depth, const std::vector<Pose>& gt_poses,
                    double crop_fraction = 0.7);

}  // namespace jdsr
