#include "jdsr/eval.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "jdsr/error.hpp"

namespace jdsr {
namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

DepthError depth_error(const InverseDepthMap& est, const InverseDepthMap& gt, double crop_fraction) {
  require(est.width() == gt.width() && est.height() == gt.height(), ErrorCode::kDimensionMismatch,
          "depth_error: maps differ in size");
  require(crop_fraction > 0 && crop_fraction <= 1, ErrorCode::kInvalidArgument,
          "depth_error: crop_fraction must lie in (0, 1]");
  const int cw = std::max(1, static_cast<int>(std::lround(gt.width() * crop_fraction)));
  const int ch = std::max(1, static_cast<int>(std::lround(gt.height() * crop_fraction)));
  const int x0 = (gt.width() - cw) / 2;
  const int y0 = (gt.height() - ch) / 2;

  double num = 0.0, den = 0.0, peak = 0.0;
  for (int y = y0; y < y0 + ch; ++y)
    for (int x = x0; x < x0 + cw; ++x) {
      const double g = gt.at(x, y);
      require(g > 0 && std::isfinite(g), ErrorCode::kInvalidArgument,
              "depth_error: ground truth must be positive");
      num += est.at(x, y) * g;
      den += est.at(x, y) * est.at(x, y);
      peak = std::max(peak, g);
    }
  DepthError out;
  out.scale = den > 0 ? num / den : 1.0;
  double sq = 0.0, rel = 0.0;
  for (int y = y0; y < y0 + ch; ++y)
    for (int x = x0; x < x0 + cw; ++x) {
      const double e = out.scale * est.at(x, y) - gt.at(x, y);
      sq += e * e;
      rel += std::abs(e) / gt.at(x, y);
    }
  const double n = static_cast<double>(cw) * ch;
  const double mse = sq / n;
  out.rel = rel / n;
  out.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity()
                        : 10.0 * std::log10(peak * peak / mse);
  return out;
}

double trajectory_error(const std::vector<Pose>& est, const std::vector<Pose>& gt) {
  require(est.size() == gt.size(), ErrorCode::kDimensionMismatch,
          "trajectory_error: trajectories differ in length");
  require(est.size() >= 2, ErrorCode::kInvalidArgument, "trajectory_error: needs at least 2 poses");
  const Eigen::Index n = static_cast<Eigen::Index>(est.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = est[i].center();
    dst.col(i) = gt[i].center();
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
  const Eigen::Matrix3Xd aligned = (T.topLeftCorner<3, 3>() * src).colwise() + T.topRightCorner<3, 1>();
  return std::sqrt((aligned - dst).colwise().squaredNorm().mean());
}

std::vector<double> latent_psnr(const std::vector<Image>& est, const std::vector<Image>& gt) {
  require(est.size() == gt.size(), ErrorCode::kDimensionMismatch,
          "latent_psnr: frame counts differ");
  std::vector<double> out;
  for (std::size_t t = 0; t < est.size(); ++t) {
    require(est[t].same_shape(gt[t]), ErrorCode::kDimensionMismatch,
            "latent_psnr: frame " + std::to_string(t) + " differs in size");
    out.push_back(psnr(est[t], gt[t]));
  }
  return out;
}

EvalReport evaluate(const std::vector<Image>& latent, const std::vector<InverseDepthMap>& depth,
                    const std::vector<Pose>& poses, const std::vector<Image>& gt_latent,
                    const std::vector<InverseDepthMap>& gt_depth, const std::vector<Pose>& gt_poses,
                    double crop_fraction) {
  require(depth.size() == gt_depth.size(), ErrorCode::kDimensionMismatch,
          "evaluate: depth frame counts differ");
  EvalReport r;
  r.image_psnr = latent_psnr(latent, gt_latent);
  for (std::size_t t = 0; t < depth.size(); ++t) {
    require(depth[t].width() == gt_depth[t].width() && depth[t].height() == gt_depth[t].height(),
            ErrorCode::kDimensionMismatch, "evaluate: depth of frame " + std::to_string(t) + " differs in size");
    const DepthError e = depth_error(depth[t], gt_depth[t], crop_fraction);
    r.depth_psnr.push_back(e.psnr);
    r.depth_rel.push_back(e.rel);
  }
  r.ate = trajectory_error(poses, gt_poses);
  r.mean_image_psnr = mean(r.image_psnr);
  r.mean_depth_psnr = mean(r.depth_psnr);
  r.mean_depth_rel = mean(r.depth_rel);
  return r;
}

std::string EvalReport::text() const {
  std::string out =
      "# ate_alignment=sim3\n# depth_metric=inverse_depth peak=max_gt\n# image_psnr=rgb\n";
  out += "method " + method + "\n";
  for (std::size_t t = 0; t < image_psnr.size(); ++t) {
    out += "frame " + std::to_string(t) + " image_psnr " + fmt(image_psnr[t]);
    if (t < depth_psnr.size())
      out += " depth_psnr " + fmt(depth_psnr[t]) + " depth_rel " + fmt(depth_rel[t]);
    out += "\n";
  }
  out += "mean image_psnr " + fmt(mean_image_psnr) + " depth_psnr " + fmt(mean_depth_psnr) +
         " depth_rel " + fmt(mean_depth_rel) + "\n";
  out += "e_ate " + fmt(ate) + "\n";
  return out;
}

std::string EvalReport::csv_header() { return "method,frame,image_psnr,depth_psnr,depth_rel,e_ate\n"; }

std::string EvalReport::csv_rows() const {
  std::string out;
  for (std::size_t t = 0; t < image_psnr.size(); ++t)
    out += method + "," + std::to_string(t) + "," + fmt(image_psnr[t]) + "," +
           (t < depth_psnr.size() ? fmt(depth_psnr[t]) + "," + fmt(depth_rel[t]) : std::string(",")) +
           ",\n";
  out += method + ",mean," + fmt(mean_image_psnr) + "," + fmt(mean_depth_psnr) + "," +
         fmt(mean_depth_rel) + "," + fmt(ate) + "\n";
  return out;
}

}  // namespace jdsr
