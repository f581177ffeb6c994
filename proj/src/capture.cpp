#include "jdsr/capture.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "jdsr/error.hpp"
#include "jdsr/parallel.hpp"

namespace jdsr {

void CaptureModel::validate() const {
  K.validate();
  require(samples >= 1, ErrorCode::kInvalidArgument, "capture model needs M >= 1");
  require(factor >= 1, ErrorCode::kInvalidArgument, "capture model needs factor >= 1");
  require(exposure_fraction > 0.0 && exposure_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "exposure_fraction must lie in (0, 1]");
}

std::vector<double> sample_times(const CaptureModel& model, double t, double s) {
  require(t != s, ErrorCode::kInvalidArgument, "sample_times: t and s coincide");
  const double t_close = t;
  const double t_open = t - model.exposure_fraction * (t - s);
  std::vector<double> alphas(model.samples);
  for (int m = 1; m <= model.samples; ++m) {
    const double tau = (static_cast<double>(m) / model.samples) * (t_close - t_open) + t_open;
    alphas[m - 1] = (tau - s) / (t - s);
  }
  return alphas;
}

SparseLinearOperator::SparseLinearOperator(int rows, int cols, std::vector<std::size_t> row_ptr,
                                           std::vector<int> col, std::vector<double> val)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col)), val_(std::move(val)) {
  require(row_ptr_.size() == static_cast<std::size_t>(rows) + 1 && row_ptr_.back() == col_.size() &&
              col_.size() == val_.size(),
          ErrorCode::kDimensionMismatch, "inconsistent compressed-row arrays");
}

SparseLinearOperator SparseLinearOperator::from_triplets(int rows, int cols,
                                                         std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<int> col;
  std::vector<double> val;
  int last_row = -1;
  for (const Triplet& t : triplets) {
    require(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols, ErrorCode::kInvalidArgument,
            "triplet index out of range");
    if (t.row == last_row && col.back() == t.col) {
      val.back() += t.weight;
      continue;
    }
    col.push_back(t.col);
    val.push_back(t.weight);
    ++row_ptr[t.row + 1];
    last_row = t.row;
  }
  for (int r = 0; r < rows; ++r) row_ptr[r + 1] += row_ptr[r];
  return SparseLinearOperator(rows, cols, std::move(row_ptr), std::move(col), std::move(val));
}

SparseLinearOperator SparseLinearOperator::identity(int n) {
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<int> col(n);
  for (int i = 0; i <= n; ++i) row_ptr[i] = i;
  for (int i = 0; i < n; ++i) col[i] = i;
  return SparseLinearOperator(n, n, std::move(row_ptr), std::move(col), std::vector<double>(n, 1.0));
}

std::vector<double> SparseLinearOperator::apply(std::span<const double> x) const {
  require(x.size() == static_cast<std::size_t>(cols_), ErrorCode::kDimensionMismatch,
          "operator apply: input length " + std::to_string(x.size()) + " != " + std::to_string(cols_));
  std::vector<double> y(rows_, 0.0);
  parallel_for(rows_, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[r] = acc;
    }
  });
  return y;
}

std::vector<Triplet> SparseLinearOperator::triplets() const {
  std::vector<Triplet> out;
  out.reserve(val_.size());
  for (int r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_[k], val_[k]});
  return out;
}

void SparseLinearOperator::write_triplets(std::ostream& out) const {
  for (const Triplet& t : triplets()) out << t.row << ' ' << t.col << ' ' << t.weight << '\n';
}

std::vector<double> apply_adjoint(const SparseLinearOperator& op, std::span<const double> residual) {
  require(residual.size() == static_cast<std::size_t>(op.rows()), ErrorCode::kDimensionMismatch,
          "apply_adjoint: residual length " + std::to_string(residual.size()) +
              " != " + std::to_string(op.rows()));
  std::vector<double> out(op.cols(), 0.0);
  for (int r = 0; r < op.rows(); ++r) {
    const double v = residual[r];
    if (v == 0.0) continue;
    const auto cols = op.row_cols(r);
    const auto w = op.row_weights(r);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += w[k] * v;
  }
  return out;
}

Image apply_operator(const SparseLinearOperator& op, const Image& image, int out_width,
                     int out_height) {
  require(static_cast<std::size_t>(op.cols()) == image.pixel_count() &&
              op.rows() == out_width * out_height,
          ErrorCode::kDimensionMismatch, "apply_operator: shape mismatch");
  Image out(out_width, out_height, image.channels());
  for (int c = 0; c < image.channels(); ++c) out.set_channel(c, op.apply(image.channel(c)));
  return out;
}

namespace detail {

IntermediateDepths intermediate_depths(const InverseDepthMap& depth_t, const Pose& pose_t,
                                       const Pose& pose_prev, const CaptureModel& model) {
  IntermediateDepths out;
  out.alphas = sample_times(model, 1.0, 0.0);
  const Twist delta = se3_log(pose_t * pose_prev.inverse());
  out.depths.reserve(out.alphas.size());
  for (double alpha : out.alphas) {
    if (alpha == 1.0) {
      out.depths.push_back(depth_t);
    } else {
      const Pose tau = se3_exp(alpha * delta) * pose_prev;
      out.depths.push_back(warp_depth_map(depth_t, pose_t, tau, model.K));
    }
  }
  return out;
}

CaptureSamples capture_samples_with_depths(const IntermediateDepths& depths, const Pose& pose_t,
                                           const Pose& pose_prev, const CaptureModel& model,
                                           const std::optional<Pose>& image_pose) {
  require(!depths.depths.empty(), ErrorCode::kInvalidArgument, "no intermediate depth maps");
  const int w = depths.depths.front().width();
  const int h = depths.depths.front().height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  CaptureSamples s;
  s.width = w;
  s.height = h;
  s.count = static_cast<int>(depths.alphas.size());
  s.position.resize(n * s.count);
  s.ok.assign(n * s.count, 1);

  const Twist delta = se3_log(pose_t * pose_prev.inverse());
  const Pose target = image_pose.value_or(pose_t);
  for (int m = 0; m < s.count; ++m) {
    const double alpha = depths.alphas[m];
    const bool shutter_close = alpha == 1.0;
    const Pose tau = shutter_close ? pose_t : se3_exp(alpha * delta) * pose_prev;
    Vec2* pos = s.position.data() + m * n;
    std::uint8_t* ok = s.ok.data() + m * n;
    if (shutter_close && !image_pose) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) pos[static_cast<std::size_t>(y) * w + x] = Vec2(x, y);
      continue;
    }
    const RelativeWarp warp(tau, target, model.K);
    const InverseDepthMap& d = depths.depths[m];
    parallel_for(h, [&](std::size_t yb, std::size_t ye) {
      for (std::size_t y = yb; y < ye; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t i = y * w + x;
          const auto p = warp(x, static_cast<double>(y), d[i]);
          if (p) {
            pos[i] = p->pixel;
          } else {
            pos[i] = Vec2(x, static_cast<double>(y));
            ok[i] = 0;
          }
        }
    });
  }
  return s;
}

CaptureSamples capture_samples(const InverseDepthMap& depth_t, const Pose& pose_t,
                               const Pose& pose_prev, const CaptureModel& model,
                               const std::optional<Pose>& image_pose) {
  model.validate();
  return capture_samples_with_depths(intermediate_depths(depth_t, pose_t, pose_prev, model), pose_t,
                                     pose_prev, model, image_pose);
}

CaptureResult apply_samples(const Image& image, const CaptureSamples& samples, int factor) {
  require(image.width() == samples.width && image.height() == samples.height,
          ErrorCode::kDimensionMismatch, "apply_capture: image does not match depth map size");
  const int w = samples.width;
  const int h = samples.height;
  const int nc = image.channels();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Image blurred(w, h, nc);
  std::vector<std::uint8_t> hr_valid(n, 1);
  const double inv_m = 1.0 / samples.count;
  auto out = blurred.data();
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::array<double, 3> acc{};
      for (int m = 0; m < samples.count; ++m) {
        const std::size_t k = m * n + i;
        if (!samples.ok[k]) {
          hr_valid[i] = 0;
          continue;
        }
        const ColorSample cs = sample_bilinear(image, samples.position[k].x(), samples.position[k].y());
        if (!cs.in_bounds) hr_valid[i] = 0;
        for (int c = 0; c < nc; ++c) acc[c] += cs.value[c];
      }
      for (int c = 0; c < nc; ++c) out[i * nc + c] = acc[c] * inv_m;
    }
  });

  CaptureResult result;
  result.image = downsample_box(blurred, factor);
  const int lw = w / factor;
  const int lh = h / factor;
  result.valid.assign(static_cast<std::size_t>(lw) * lh, 1);
  for (int y = 0; y < lh; ++y)
    for (int x = 0; x < lw; ++x)
      for (int j = 0; j < factor; ++j)
        for (int i = 0; i < factor; ++i)
          if (!hr_valid[static_cast<std::size_t>(y * factor + j) * w + x * factor + i])
            result.valid[static_cast<std::size_t>(y) * lw + x] = 0;
  return result;
}

}  // namespace detail

CaptureResult apply_capture(const Image& image, const InverseDepthMap& depth_t, const Pose& pose_t,
                            const Pose& pose_prev, const CaptureModel& model,
                            const std::optional<Pose>& image_pose) {
  model.validate();
  require(image.width() == depth_t.width() && image.height() == depth_t.height(),
          ErrorCode::kDimensionMismatch, "apply_capture: image and depth map sizes differ");
  const auto samples = detail::capture_samples(depth_t, pose_t, pose_prev, model, image_pose);
  return detail::apply_samples(image, samples, model.factor);
}

CaptureOperator build_capture_operator(const InverseDepthMap& depth_t, const Pose& pose_t,
                                       const Pose& pose_prev, const CaptureModel& model,
                                       const std::optional<Pose>& image_pose) {
  model.validate();
  const int f = model.factor;
  require(depth_t.width() % f == 0 && depth_t.height() % f == 0, ErrorCode::kDimensionMismatch,
          "capture operator: HR size not divisible by factor");
  const auto s = detail::capture_samples(depth_t, pose_t, pose_prev, model, image_pose);
  const int w = s.width;
  const int h = s.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const int lw = w / f;
  const int lh = h / f;
  const std::size_t rows = static_cast<std::size_t>(lw) * lh;
  const double scale = 1.0 / (static_cast<double>(s.count) * f * f);

  std::vector<std::vector<std::pair<int, double>>> row_terms(rows);
  CaptureOperator out;
  out.valid.assign(rows, 1);
  parallel_for(rows, [&](std::size_t b, std::size_t e) {
    std::vector<std::pair<int, double>> terms;
    for (std::size_t r = b; r < e; ++r) {
      const int X = static_cast<int>(r % lw);
      const int Y = static_cast<int>(r / lw);
      terms.clear();
      for (int j = 0; j < f; ++j)
        for (int i = 0; i < f; ++i) {
          const std::size_t p = static_cast<std::size_t>(Y * f + j) * w + X * f + i;
          for (int m = 0; m < s.count; ++m) {
            const std::size_t k = m * n + p;
            if (!s.ok[k]) {
              out.valid[r] = 0;
              continue;
            }
            const BilinearStencil st = bilinear_stencil(s.position[k].x(), s.position[k].y(), w, h);
            if (!st.in_bounds) out.valid[r] = 0;
            for (int q = 0; q < 4; ++q)
              if (st.weight[q] != 0.0) terms.emplace_back(st.index[q], st.weight[q] * scale);
          }
        }
      std::sort(terms.begin(), terms.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      auto& merged = row_terms[r];
      for (const auto& t : terms) {
        if (!merged.empty() && merged.back().first == t.first) merged.back().second += t.second;
        else merged.push_back(t);
      }
    }
  });

  std::vector<std::size_t> row_ptr(rows + 1, 0);
  for (std::size_t r = 0; r < rows; ++r) row_ptr[r + 1] = row_ptr[r] + row_terms[r].size();
  std::vector<int> col(row_ptr.back());
  std::vector<double> val(row_ptr.back());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < row_terms[r].size(); ++k) {
      col[row_ptr[r] + k] = row_terms[r][k].first;
      val[row_ptr[r] + k] = row_terms[r][k].second;
    }
  out.matrix = SparseLinearOperator(static_cast<int>(rows), static_cast<int>(n), std::move(row_ptr),
                                    std::move(col), std::move(val));
  return out;
}

}  // namespace jdsr
