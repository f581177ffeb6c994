#include "jdsr/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "jdsr/error.hpp"
#include "jdsr/visibility.hpp"

namespace jdsr {

void SolverConfig::validate() const {
  require(max_iter >= 0, ErrorCode::kInvalidArgument, "max_iter must be >= 0");
  require(irls_inner >= 1 && cg_iters >= 1 && init_warps >= 1, ErrorCode::kInvalidArgument,
          "irls_inner, cg_iters and init_warps must be >= 1");
  require(cg_tol > 0 && irls_epsilon > 0 && step_damping >= 0 && init_damping >= 0, ErrorCode::kInvalidArgument,
          "cg_tol and irls_epsilon must be positive, step_damping and init_damping non-negative");
  require(pyramid_factor > 0 && pyramid_factor < 1, ErrorCode::kInvalidArgument,
          "pyramid_factor must lie in (0, 1)");
  require(pyramid_min_dim >= 2, ErrorCode::kInvalidArgument, "pyramid_min_dim must be >= 2");
  require(d_min > 0 && d_max > d_min, ErrorCode::kInvalidArgument, "need 0 < d_min < d_max");
  require(init_inverse_depth >= d_min && init_inverse_depth <= d_max, ErrorCode::kInvalidArgument,
          "init_inverse_depth must lie in [d_min, d_max]");
  require(seed_frames >= 1, ErrorCode::kInvalidArgument, "seed_frames must be >= 1");
}

// ---------------------------------------------------------------------------
// Image subproblem

namespace {

struct DataBlock {
  SparseLinearOperator op;
  std::vector<std::uint8_t> use;
  const Image* target = nullptr;
  double weight = 1.0;
};

std::vector<DataBlock> image_blocks(int t, const SequenceState& state, const Problem& problem,
                                    const EnergyParams& params) {
  std::vector<DataBlock> blocks;
  const auto& ft = state.frames[t];
  for (int s : state.neighbors(t, params.neighbor_radius)) {
    const auto& fs = state.frames[s];
    CaptureOperator op = build_capture_operator(fs.depth, fs.pose, state.previous_pose(s),
                                                state.capture, ft.pose);
    const VisibilityMask mask = state.mask(s, t);
    for (std::size_t r = 0; r < op.valid.size(); ++r) op.valid[r] = op.valid[r] && mask.visible[r];
    blocks.push_back({std::move(op.matrix), std::move(op.valid), &problem.observed[s], 1.0});
  }
  if (params.lambda_s > 0) {
    CaptureOperator op =
        build_capture_operator(ft.depth, ft.pose, state.previous_pose(t), state.capture);
    blocks.push_back({std::move(op.matrix), std::move(op.valid), &problem.observed[t], params.lambda_s});
  }
  return blocks;
}

double blocks_objective(const std::vector<DataBlock>& blocks, const Image& latent,
                        const EnergyParams& params) {
  double e = 0.0;
  for (const auto& b : blocks) {
    const Image pred = apply_operator(b.op, latent, b.target->width(), b.target->height());
    e += b.weight * masked_l1(*b.target, pred, b.use, {});
  }
  if (params.lambda_i > 0) e += params.lambda_i * image_tv(latent);
  return e;
}

}  // namespace

double image_objective(int t, const Image& latent, const SequenceState& state,
                       const Problem& problem, const EnergyParams& params) {
  return blocks_objective(image_blocks(t, state, problem, params), latent, params);
}

Image update_image(int t, const SequenceState& state, const Problem& problem,
                   const EnergyParams& params, const SolverConfig& config,
                   ImageUpdateReport* report) {
  const Image& current = state.frames[t].latent;
  const int w = current.width();
  const int h = current.height();
  const int nc = current.channels();
  const std::size_t n = current.pixel_count();
  const auto blocks = image_blocks(t, state, problem, params);

  CsrMatrix J(static_cast<int>(n));
  std::vector<double> scale;
  std::vector<const double*> target_px;  // first channel of the observed pixel
  std::vector<std::size_t> tv_pixel;
  for (const auto& b : blocks) {
    const auto obs = b.target->data();
    for (int r = 0; r < b.op.rows(); ++r) {
      if (!b.use[r]) continue;
      const auto cols = b.op.row_cols(r);
      const auto vals = b.op.row_weights(r);
      for (std::size_t k = 0; k < cols.size(); ++k) J.add(cols[k], vals[k]);
      J.end_row();
      scale.push_back(b.weight);
      target_px.push_back(obs.data() + static_cast<std::size_t>(r) * nc);
    }
  }
  const int data_rows = J.rows();
  if (params.lambda_i > 0) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (x + 1 < w) {
          J.add(static_cast<int>(p + 1), 1.0);
          J.add(static_cast<int>(p), -1.0);
          J.end_row();
          tv_pixel.push_back(p);
        }
        if (y + 1 < h) {
          J.add(static_cast<int>(p + w), 1.0);
          J.add(static_cast<int>(p), -1.0);
          J.end_row();
          tv_pixel.push_back(p);
        }
      }
  }
  const std::size_t rows = J.rows();

  std::vector<std::vector<double>> x(nc);
  std::vector<std::vector<double>> rhs(nc, std::vector<double>(rows, 0.0));
  for (int c = 0; c < nc; ++c) {
    x[c] = current.channel(c);
    for (int r = 0; r < data_rows; ++r) rhs[c][r] = target_px[r][c];
  }

  const CgOptions cg{config.cg_iters, config.cg_tol};
  std::vector<double> pred(rows), weights(rows), magnitude(n);
  bool breakdown = false;
  for (int it = 0; it < config.irls_inner; ++it) {
    if (params.lambda_i > 0) {
      std::fill(magnitude.begin(), magnitude.end(), 0.0);
      for (int c = 0; c < nc; ++c)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            const std::size_t p = static_cast<std::size_t>(y) * w + xx;
            const double dx = xx + 1 < w ? x[c][p + 1] - x[c][p] : 0.0;
            const double dy = y + 1 < h ? x[c][p + w] - x[c][p] : 0.0;
            magnitude[p] += dx * dx + dy * dy;
          }
      for (double& m : magnitude) m = std::sqrt(m);
    }
    for (int c = 0; c < nc; ++c) {
      J.multiply(x[c], pred);
      for (int r = 0; r < data_rows; ++r)
        weights[r] = internal::irls_weight(scale[r], rhs[c][r] - pred[r], config.irls_epsilon);
      for (std::size_t r = data_rows; r < rows; ++r)
        weights[r] = internal::irls_weight(params.lambda_i, magnitude[tv_pixel[r - data_rows]],
                                           config.irls_epsilon);
      const CgReport rep = solve_weighted_least_squares(J, weights, rhs[c], {}, x[c], cg);
      breakdown = breakdown || rep.breakdown;
    }
  }

  Image candidate(w, h, nc);
  for (int c = 0; c < nc; ++c) candidate.set_channel(c, x[c]);
  bool finite = true;
  for (double v : candidate.data()) finite = finite && std::isfinite(v);

  const double before = blocks_objective(blocks, current, params);
  const double after = finite ? blocks_objective(blocks, candidate, params) : before;
  const bool accepted = finite && !breakdown && after <= before;
  if (report) *report = {accepted, breakdown || !finite, before, accepted ? after : before};
  return accepted ? candidate : current;
}

// ---------------------------------------------------------------------------
// Structure subproblem

namespace {

constexpr double kPoseStep = 1e-6;

struct Layout {
  int frames = 0;
  std::size_t pixels = 0;
  bool poses = true;

  int depth_col(int t, std::size_t p) const { return static_cast<int>(t * pixels + p); }
  int pose_col(int k) const { return static_cast<int>(frames * pixels) + 6 * (k - 1); }
  int cols() const { return static_cast<int>(frames * pixels) + (poses ? 6 * (frames - 1) : 0); }
};

struct LinearSystem {
  CsrMatrix J;
  std::vector<double> rhs;
  std::vector<double> scale;
  std::vector<int> group;  ///< TV rows share a group per pixel; -1 otherwise
};

void add_pose_entries(CsrMatrix& J, const Layout& L, int k, const Eigen::Matrix<double, 1, 6>& g) {
  if (!L.poses || k == 0) return;
  for (int j = 0; j < 6; ++j)
    if (g[j] != 0.0) J.add(L.pose_col(k) + j, g[j]);
}

void linearize_matching(int t, const SequenceState& state, const Problem& problem,
                        const EnergyParams& params, const detail::IntermediateDepths& depths,
                        const SparseLinearOperator& own, const Layout& L, LinearSystem& sys) {
  const auto& ft = state.frames[t];
  const Pose prev = state.previous_pose(t);
  const int w = ft.depth.width();
  const std::size_t n = L.pixels;
  const auto& model = state.capture;
  const Image& obs = problem.observed[t];
  const int nc = obs.channels();

  for (int s : state.neighbors(t, params.neighbor_radius)) {
    const auto& fs = state.frames[s];
    const auto samples = detail::capture_samples_with_depths(depths, ft.pose, prev, model, fs.pose);
    const CaptureResult pred = detail::apply_samples(fs.latent, samples, model.factor);
    const VisibilityMask mask = state.mask(t, s);
    const GradientField grad = internal::central_gradient(fs.latent);
    const RelativeWarp warp(ft.pose, fs.pose, model.K);

    // Per HR pixel of t and channel: image gradient at the warped position
    // contracted with the warp Jacobians.
    std::vector<double> a(n * nc, 0.0);
    std::vector<Eigen::Matrix<double, 1, 6>> bt(n * nc), bs(n * nc);
    for (std::size_t p = 0; p < n; ++p) {
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      const double d = ft.depth[p];
      const auto u = warp(x, y, d);
      for (int c = 0; c < nc; ++c) {
        bt[p * nc + c].setZero();
        bs[p * nc + c].setZero();
      }
      if (!u) continue;
      const WarpJacobian jac = warp_jacobians(Vec2(x, y), d, ft.pose, fs.pose, model.K);
      const ColorSample gx = sample_bilinear(grad.dx, u->pixel.x(), u->pixel.y());
      const ColorSample gy = sample_bilinear(grad.dy, u->pixel.x(), u->pixel.y());
      for (int c = 0; c < nc; ++c) {
        const Eigen::RowVector2d g(gx.value[c], gy.value[c]);
        a[p * nc + c] = g * jac.du_dD;
        bt[p * nc + c] = g * jac.du_deps_t;
        bs[p * nc + c] = g * jac.du_deps_s;
      }
    }

    const auto od = obs.data();
    const auto pd = pred.image.data();
    for (int c = 0; c < nc; ++c)
      for (int r = 0; r < own.rows(); ++r) {
        if (!pred.valid[r] || !mask.visible[r]) continue;
        const auto cols = own.row_cols(r);
        const auto vals = own.row_weights(r);
        Eigen::Matrix<double, 1, 6> gt = Eigen::Matrix<double, 1, 6>::Zero();
        Eigen::Matrix<double, 1, 6> gs = Eigen::Matrix<double, 1, 6>::Zero();
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const std::size_t z = static_cast<std::size_t>(cols[k]) * nc + c;
          if (a[z] != 0.0) sys.J.add(L.depth_col(t, cols[k]), vals[k] * a[z]);
          gt += vals[k] * bt[z];
          gs += vals[k] * bs[z];
        }
        add_pose_entries(sys.J, L, t, gt);
        add_pose_entries(sys.J, L, s, gs);
        sys.J.end_row();
        const std::size_t i = static_cast<std::size_t>(r) * nc + c;
        sys.rhs.push_back(od[i] - pd[i]);
        sys.scale.push_back(1.0);
        sys.group.push_back(-1);
      }
  }
}

void linearize_self(int t, const SequenceState& state, const Problem& problem,
                    const EnergyParams& params, const detail::IntermediateDepths& depths,
                    const Layout& L, LinearSystem& sys) {
  if (params.lambda_s == 0.0) return;
  const auto& ft = state.frames[t];
  const auto& model = state.capture;
  const int w = ft.depth.width();
  const int h = ft.depth.height();
  const std::size_t n = L.pixels;
  const int M = static_cast<int>(depths.alphas.size());
  const int f = model.factor;
  const std::vector<Pose> poses = state.poses();
  const Pose prev = previous_pose(poses, t);
  const auto samples_for = [&](const std::vector<Pose>& ps) {
    return detail::capture_samples_with_depths(depths, ps[t], previous_pose(ps, t), model,
                                               std::nullopt);
  };
  const detail::CaptureSamples base = samples_for(poses);
  const CaptureResult pred = detail::apply_samples(ft.latent, base, f);
  const GradientField grad = internal::central_gradient(ft.latent);

  // Poses entering frame t's blur: its own and the one its previous pose is
  // built from. Sample motion per twist component by central differences.
  std::vector<int> involved;
  if (L.poses)
    for (int k : {t, t > 0 ? t - 1 : 1})
      if (k != 0 && std::find(involved.begin(), involved.end(), k) == involved.end())
        involved.push_back(k);
  std::vector<std::vector<Vec2>> motion;
  for (int k : involved)
    for (int j = 0; j < 6; ++j) {
      Twist e = Twist::Zero();
      e[j] = kPoseStep;
      std::vector<Pose> plus = poses, minus = poses;
      plus[k] = se3_exp(e) * poses[k];
      minus[k] = se3_exp(-e) * poses[k];
      const auto sp = samples_for(plus);
      const auto sm = samples_for(minus);
      std::vector<Vec2> d(sp.position.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = (sp.position[i] - sm.position[i]) / (2.0 * kPoseStep);
      motion.push_back(std::move(d));
    }

  // Depth enters through the intermediate views: the inverse depth seen at an
  // intermediate pixel is attributed to the frame-t pixel it lands on.
  const Twist log_delta = se3_log(ft.pose * prev.inverse());
  const Image& obs = problem.observed[t];
  const int nc = obs.channels();
  const int lw = w / f;
  const double share = 1.0 / (static_cast<double>(M) * f * f);
  const auto od = obs.data();
  const auto pd = pred.image.data();
  std::vector<Eigen::Matrix<double, 1, 6>> pose_grad(involved.size());
  for (std::size_t r = 0; r < pred.valid.size(); ++r) {
    if (!pred.valid[r]) continue;
    const int lx = static_cast<int>(r % lw);
    const int ly = static_cast<int>(r / lw);
    for (int c = 0; c < nc; ++c) {
      for (auto& g : pose_grad) g.setZero();
      for (int m = 0; m < M; ++m) {
        const double alpha = depths.alphas[m];
        const Pose tau = alpha == 1.0 ? ft.pose : se3_exp(alpha * log_delta) * prev;
        for (int j = 0; j < f; ++j)
          for (int i = 0; i < f; ++i) {
            const int x = lx * f + i;
            const int y = ly * f + j;
            const std::size_t q = static_cast<std::size_t>(y) * w + x;
            const std::size_t k = m * n + q;
            if (!base.ok[k]) continue;
            const Vec2& u = base.position[k];
            const Eigen::RowVector2d g(sample_bilinear(grad.dx, u.x(), u.y()).value[c],
                                       sample_bilinear(grad.dy, u.x(), u.y()).value[c]);
            for (std::size_t v = 0; v < involved.size(); ++v)
              for (int e = 0; e < 6; ++e)
                pose_grad[v][e] += share * g.dot(motion[v * 6 + e][k].transpose());
            if (alpha == 1.0) continue;
            const auto jac = warp_jacobians(Vec2(x, y), depths.depths[m][q], tau, ft.pose, model.K);
            const int sx = std::clamp(static_cast<int>(std::lround(u.x())), 0, w - 1);
            const int sy = std::clamp(static_cast<int>(std::lround(u.y())), 0, h - 1);
            const double v = share * g.dot(jac.du_dD.transpose());
            if (v != 0.0) sys.J.add(L.depth_col(t, static_cast<std::size_t>(sy) * w + sx), v);
          }
      }
      for (std::size_t v = 0; v < involved.size(); ++v)
        for (int e = 0; e < 6; ++e)
          if (pose_grad[v][e] != 0.0) sys.J.add(L.pose_col(involved[v]) + e, pose_grad[v][e]);
      sys.J.end_row();
      const std::size_t i = r * nc + c;
      sys.rhs.push_back(od[i] - pd[i]);
      sys.scale.push_back(params.lambda_s);
      sys.group.push_back(-1);
    }
  }
}

void linearize_depth_tv(int t, const SequenceState& state, const Problem& problem,
                        const EnergyParams& params, const Layout& L, LinearSystem& sys) {
  if (params.lambda_d == 0.0) return;
  const auto& D = state.frames[t].depth;
  const auto& g = problem.edge_weights[t].weight;
  const int w = D.width();
  const int h = D.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const int group = L.depth_col(t, p);
      const double scale = params.lambda_d * g[p];
      if (x + 1 < w) {
        sys.J.add(L.depth_col(t, p + 1), 1.0);
        sys.J.add(L.depth_col(t, p), -1.0);
        sys.J.end_row();
        sys.rhs.push_back(-(D[p + 1] - D[p]));
        sys.scale.push_back(scale);
        sys.group.push_back(group);
      }
      if (y + 1 < h) {
        sys.J.add(L.depth_col(t, p + w), 1.0);
        sys.J.add(L.depth_col(t, p), -1.0);
        sys.J.end_row();
        sys.rhs.push_back(-(D[p + w] - D[p]));
        sys.scale.push_back(scale);
        sys.group.push_back(group);
      }
    }
}

LinearSystem linearize(const SequenceState& state, const Problem& problem,
                       const EnergyParams& params, const Layout& L) {
  LinearSystem sys{CsrMatrix(L.cols()), {}, {}, {}};
  for (int t = 0; t < state.size(); ++t) {
    const auto& ft = state.frames[t];
    const Pose prev = state.previous_pose(t);
    const auto depths = detail::intermediate_depths(ft.depth, ft.pose, prev, state.capture);
    const auto own = build_capture_operator(ft.depth, ft.pose, prev, state.capture);
    linearize_matching(t, state, problem, params, depths, own.matrix, L, sys);
    linearize_self(t, state, problem, params, depths, L, sys);
    linearize_depth_tv(t, state, problem, params, L, sys);
  }
  return sys;
}

std::vector<double> irls_weights(const LinearSystem& sys, std::span<const double> delta,
                                 double epsilon) {
  const std::size_t m = sys.rhs.size();
  std::vector<double> lin(m);
  sys.J.multiply(delta, lin);
  for (std::size_t r = 0; r < m; ++r) lin[r] = sys.rhs[r] - lin[r];
  std::vector<double> mag(sys.J.cols(), 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (sys.group[r] >= 0) mag[sys.group[r]] += lin[r] * lin[r];
  std::vector<double> w(m);
  for (std::size_t r = 0; r < m; ++r)
    w[r] = sys.group[r] >= 0 ? internal::irls_weight(sys.scale[r], std::sqrt(mag[sys.group[r]]), epsilon)
                             : internal::irls_weight(sys.scale[r], lin[r], epsilon);
  return w;
}

bool pose_blocks_singular(const LinearSystem& sys, std::span<const double> w,
                          std::span<const double> damping, const Layout& L) {
  const int first = L.pose_col(1);
  std::vector<Eigen::Matrix<double, 6, 6>> H(L.frames - 1, Eigen::Matrix<double, 6, 6>::Zero());
  for (int r = 0; r < sys.J.rows(); ++r) {
    const auto cols = sys.J.row_cols(r);
    const auto vals = sys.J.row_values(r);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      if (cols[a] < first) continue;
      const int blk = (cols[a] - first) / 6;
      for (std::size_t b = 0; b < cols.size(); ++b) {
        if (cols[b] < first || (cols[b] - first) / 6 != blk) continue;
        H[blk]((cols[a] - first) % 6, (cols[b] - first) % 6) += w[r] * vals[a] * vals[b];
      }
    }
  }
  for (int k = 0; k + 1 < L.frames; ++k) {
    for (int j = 0; j < 6; ++j) H[k](j, j) += damping[first + 6 * k + j];
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(H[k]);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(hi > 0.0) || !(lo > 1e-12 * hi)) return true;
  }
  return false;
}

SequenceState apply_delta(const SequenceState& state, const StructureDelta& delta, double step,
                          const SolverConfig& config) {
  SequenceState out = state;
  for (int t = 0; t < out.size(); ++t) {
    auto& D = out.frames[t].depth;
    for (std::size_t p = 0; p < D.size(); ++p)
      D[p] = std::clamp(D[p] + step * delta.depth[t][p], config.d_min, config.d_max);
    out.frames[t].pose = se3_exp(step * delta.twist[t]) * out.frames[t].pose;
  }
  return out;
}

/// Solves the reweighted linearized system; returns false when the pose
/// blocks are singular and poses were requested.
bool solve_structure(const LinearSystem& sys, const Layout& L, const SolverConfig& config,
                     std::vector<double>& delta) {
  delta.assign(L.cols(), 0.0);
  std::vector<ColumnBlock> blocks;
  if (L.poses)
    for (int k = 1; k < L.frames; ++k) blocks.push_back({L.pose_col(k), 6});
  const CgOptions cg{config.cg_iters, config.cg_tol};
  for (int it = 0; it < config.irls_inner; ++it) {
    const std::vector<double> w = irls_weights(sys, delta, config.irls_epsilon);
    std::vector<double> damping = normal_diagonal(sys.J, w);
    for (double& d : damping) d = config.step_damping * d + 1e-12;
    if (it == 0 && L.poses && pose_blocks_singular(sys, w, damping, L)) return false;
    solve_weighted_least_squares(sys.J, w, sys.rhs, damping, delta, cg, blocks);
  }
  return true;
}

StructureDelta unpack(const std::vector<double>& x, const Layout& L) {
  StructureDelta d;
  d.depth.resize(L.frames);
  d.twist.assign(L.frames, Twist::Zero());
  for (int t = 0; t < L.frames; ++t)
    d.depth[t].assign(x.begin() + static_cast<std::ptrdiff_t>(t * L.pixels),
                      x.begin() + static_cast<std::ptrdiff_t>((t + 1) * L.pixels));
  if (L.poses)
    for (int k = 1; k < L.frames; ++k)
      for (int j = 0; j < 6; ++j) d.twist[k][j] = x[L.pose_col(k) + j];
  return d;
}

StructureUpdateReport structure_step(SequenceState& state, const Problem& problem,
                                     const EnergyParams& params, const SolverConfig& config) {
  Layout L{state.size(), state.frames[0].depth.size(), state.size() > 1};
  StructureUpdateReport report;
  std::vector<double> x;
  {
    const LinearSystem sys = linearize(state, problem, params, L);
    if (!solve_structure(sys, L, config, x)) {
      report.poses_frozen = true;
      L.poses = false;
      const LinearSystem depth_only = linearize(state, problem, params, L);
      solve_structure(depth_only, L, config, x);
    }
  }
  const StructureDelta delta = unpack(x, L);

  report.energy_before = total_energy(state, problem, params).total;
  report.energy_after = report.energy_before;
  double step = 1.0;
  for (int h = 0; h <= 5; ++h, step *= 0.5) {
    bool finite = true;
    for (const auto& d : delta.depth)
      for (double v : d) finite = finite && std::isfinite(v);
    for (const auto& e : delta.twist) finite = finite && e.allFinite();
    if (!finite) break;
    SequenceState candidate = apply_delta(state, delta, step, config);
    const double e = total_energy(candidate, problem, params).total;
    if (std::isfinite(e) && e <= report.energy_before) {
      report.accepted = true;
      report.halvings = h;
      report.energy_after = e;
      state = std::move(candidate);
      report.delta = delta;
      for (auto& d : report.delta.depth)
        for (double& v : d) v *= step;
      for (auto& t : report.delta.twist) t *= step;
      break;
    }
  }
  return report;
}

}  // namespace

StructureUpdateReport update_structure(SequenceState& state, const Problem& problem,
                                       const EnergyParams& params, const SolverConfig& config) {
  if (!config.relinearize_inner) return structure_step(state, problem, params, config);
  SolverConfig single = config;
  single.irls_inner = 1;
  StructureUpdateReport total;
  for (int it = 0; it < config.irls_inner; ++it) {
    StructureUpdateReport step = structure_step(state, problem, params, single);
    if (it == 0) total.energy_before = step.energy_before;
    total.energy_after = step.energy_after;
    total.accepted = total.accepted || step.accepted;
    total.poses_frozen = total.poses_frozen || step.poses_frozen;
    total.halvings += step.halvings;
    if (!step.accepted) break;
    if (total.delta.depth.empty()) {
      total.delta = step.delta;
    } else {
      for (std::size_t t = 0; t < step.delta.depth.size(); ++t) {
        for (std::size_t p = 0; p < step.delta.depth[t].size(); ++p)
          total.delta.depth[t][p] += step.delta.depth[t][p];
        total.delta.twist[t] += step.delta.twist[t];
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Outer loop

PipelineResult optimize(SequenceState state, const Problem& problem, const EnergyParams& params,
                        const SolverConfig& config, const CheckpointFn& checkpoint) {
  config.validate();
  params.validate();
  PipelineResult result;
  update_visibility(state, params.neighbor_radius);
  result.history.push_back({0, "init", total_energy(state, problem, params)});
  if (checkpoint) checkpoint(0, state, result.history);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    if (config.update_images) {
      for (int t = 0; t < state.size(); ++t) {
        ImageUpdateReport rep;
        Image next = update_image(t, state, problem, params, config, &rep);
        if (rep.breakdown &&
            std::find(result.flagged_frames.begin(), result.flagged_frames.end(), t) ==
                result.flagged_frames.end())
          result.flagged_frames.push_back(t);
        state.frames[t].latent = std::move(next);
      }
      result.history.push_back({iter, "image", total_energy(state, problem, params)});
    }
    result.structure_steps.push_back(update_structure(state, problem, params, config));
    result.history.push_back({iter, "structure", total_energy(state, problem, params)});
    update_visibility(state, params.neighbor_radius);
    result.history.push_back({iter, "visibility", total_energy(state, problem, params)});
    if (checkpoint) checkpoint(iter, state, result.history);
  }
  std::sort(result.flagged_frames.begin(), result.flagged_frames.end());
  result.state = std::move(state);
  return result;
}

PipelineResult run_pipeline(const Problem& problem, const std::vector<Pose>& seeds,
                            const CaptureModel& capture, const EnergyParams& params,
                            const SolverConfig& config, const CheckpointFn& checkpoint) {
  InitReport init;
  SequenceState state = initialize(problem, seeds, capture, params, config, &init);
  PipelineResult result = optimize(std::move(state), problem, params, config, checkpoint);
  for (int t : init.diverged_frames)
    if (std::find(result.flagged_frames.begin(), result.flagged_frames.end(), t) ==
        result.flagged_frames.end())
      result.flagged_frames.push_back(t);
  std::sort(result.flagged_frames.begin(), result.flagged_frames.end());
  return result;
}

}  // namespace jdsr
