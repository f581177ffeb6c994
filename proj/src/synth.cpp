#include "jdsr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "jdsr/error.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/parallel.hpp"
#include "jdsr/state.hpp"

namespace jdsr {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice(long i, long j, std::uint64_t salt) {
  const std::uint64_t h = splitmix(salt ^ splitmix(static_cast<std::uint64_t>(i) * 0x632BE59BD9B4E019ull ^
                                                   static_cast<std::uint64_t>(j)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(double u, double v, std::uint64_t salt) {
  const double fu = std::floor(u), fv = std::floor(v);
  const long i = static_cast<long>(fu), j = static_cast<long>(fv);
  double a = u - fu, b = v - fv;
  a = a * a * (3.0 - 2.0 * a);
  b = b * b * (3.0 - 2.0 * b);
  const double v00 = lattice(i, j, salt), v10 = lattice(i + 1, j, salt);
  const double v01 = lattice(i, j + 1, salt), v11 = lattice(i + 1, j + 1, salt);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

class Texture {
 public:
  Texture(const SceneSpec& spec, std::uint64_t salt) : spec_(spec), salt_(salt) {
    if (spec.texture == TextureKind::kPng) image_ = std::make_shared<Image>(read_png(spec.texture_path));
  }

  std::array<double, 3> operator()(double u, double v) const {
    const double s = spec_.texture_scale;
    switch (spec_.texture) {
      case TextureKind::kChecker: {
        const long a = static_cast<long>(std::floor(u * 10.0 * s));
        const long b = static_cast<long>(std::floor(v * 10.0 * s));
        const bool odd = ((a + b) & 1) != 0;
        const double shade = 0.2 + 0.4 * lattice(0, 0, salt_);
        return odd ? std::array<double, 3>{0.9, 0.85, 0.8}
                   : std::array<double, 3>{shade, shade * 0.8, shade * 0.6};
      }
      case TextureKind::kPng: {
        const double x = (u * 0.5 * s - std::floor(u * 0.5 * s)) * (image_->width() - 1);
        const double y = (v * 0.5 * s - std::floor(v * 0.5 * s)) * (image_->height() - 1);
        const ColorSample c = sample_bilinear(*image_, x, y);
        if (image_->channels() == 1) return {c.value[0], c.value[0], c.value[0]};
        return c.value;
      }
      case TextureKind::kNoise:
      default: {
        std::array<double, 3> rgb{};
        const double freq[] = {3.0, 7.0, 15.0};
        const double amp[] = {0.45, 0.35, 0.2};
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int o = 0; o < 3; ++o)
            acc += amp[o] * value_noise(u * freq[o] * s, v * freq[o] * s, salt_ * 7 + c * 131 + o);
          rgb[c] = acc;
        }
        // Mix towards a shared luminance so channels stay correlated, then
        // stretch the contrast of the roughly mean-0.5 octave sum.
        const double luma = (rgb[0] + rgb[1] + rgb[2]) / 3.0;
        for (double& x : rgb) x = std::clamp(0.5 + 1.8 * (0.6 * luma + 0.4 * x - 0.5), 0.0, 1.0);
        return rgb;
      }
    }
  }

 private:
  const SceneSpec& spec_;
  std::uint64_t salt_;
  std::shared_ptr<Image> image_;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  std::array<double, 3> color{};
};

class Scene {
 public:
  explicit Scene(const SceneSpec& spec)
      : spec_(spec), background_(spec, 2 * spec.seed + 1), foreground_(spec, 2 * spec.seed + 2) {}

  Hit cast(const Vec3& o, const Vec3& d) const {
    Hit best;
    const double zb = 1.0 / spec_.background_inverse_depth;
    if (d.z() != 0.0) {
      const double t = (zb - o.z()) / d.z();
      if (t > 0) {
        const Vec3 p = o + t * d;
        best = {t, background_(p.x(), p.y())};
      }
    }
    const auto& r = spec_.foreground_rect;
    const double zf = 1.0 / spec_.foreground_inverse_depth;
    if (spec_.kind == SceneKind::kTwoPlanes && d.z() != 0.0) {
      const double t = (zf - o.z()) / d.z();
      const Vec3 p = o + t * d;
      if (t > 0 && t < best.t && p.x() >= r[0] && p.x() <= r[1] && p.y() >= r[2] && p.y() <= r[3])
        best = {t, foreground_(p.x(), p.y())};
    } else if (spec_.kind == SceneKind::kBox) {
      const double lo[3] = {r[0], r[2], zf};
      const double hi[3] = {r[1], r[3], zf + spec_.box_depth};
      double t_near = -std::numeric_limits<double>::infinity();
      double t_far = std::numeric_limits<double>::infinity();
      int axis = -1;
      bool miss = false;
      for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
          if (o[a] < lo[a] || o[a] > hi[a]) miss = true;
          continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > t_near) {
          t_near = t0;
          axis = a;
        }
        t_far = std::min(t_far, t1);
      }
      if (!miss && axis >= 0 && t_near <= t_far && t_near > 0 && t_near < best.t) {
        const Vec3 p = o + t_near * d;
        const double u = axis == 0 ? p.z() : p.x();
        const double v = axis == 1 ? p.z() : p.y();
        auto c = foreground_(u, v);
        // Side faces are shaded darker so the silhouette stays visible.
        if (axis != 2)
          for (double& x : c) x *= 0.7;
        best = {t_near, c};
      }
    }
    return best;
  }

 private:
  const SceneSpec& spec_;
  Texture background_;
  Texture foreground_;
};

}  // namespace

std::vector<Pose> SceneSpec::poses() const {
  std::vector<Pose> out;
  out.reserve(path.size());
  for (const Twist& xi : path) out.push_back(se3_exp(xi));
  return out;
}

void SceneSpec::validate() const {
  require(frames() >= 2, ErrorCode::kInvalidArgument, "scene needs at least 2 frames (T >= 2)");
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "scene size must be positive");
  require(factor >= 1 && width % factor == 0 && height % factor == 0, ErrorCode::kInvalidArgument,
          "scene size must be divisible by factor");
  K.validate();
  require(background_inverse_depth > 0 && foreground_inverse_depth > 0, ErrorCode::kInvalidArgument,
          "plane inverse depths must be positive");
  require(foreground_inverse_depth > background_inverse_depth || kind == SceneKind::kPlane,
          ErrorCode::kInvalidArgument, "foreground must be nearer than the background");
  require(foreground_rect.size() == 4 && foreground_rect[0] < foreground_rect[1] &&
              foreground_rect[2] < foreground_rect[3],
          ErrorCode::kInvalidArgument, "foreground_rect needs x0 < x1 and y0 < y1");
  require(box_depth >= 0, ErrorCode::kInvalidArgument, "box_depth must be non-negative");
  require(exposure_fraction > 0 && exposure_fraction <= 1, ErrorCode::kInvalidArgument,
          "exposure_fraction must lie in (0, 1]");
  require(render_samples >= 1, ErrorCode::kInvalidArgument, "render_samples must be >= 1");
  require(noise_sigma >= 0, ErrorCode::kInvalidArgument, "noise_sigma must be non-negative");
  require(texture_scale > 0, ErrorCode::kInvalidArgument, "texture_scale must be positive");
  require(texture != TextureKind::kPng || !texture_path.empty(), ErrorCode::kInvalidArgument,
          "png texture needs texture_path");
  for (const Twist& xi : path)
    require(xi.allFinite(), ErrorCode::kInvalidArgument, "camera path twists must be finite");
}

SceneSpec default_desk_spec() {
  SceneSpec s;
  const double increments[4][6] = {
      {0.040, 0.012, 0.004, -0.003, 0.010, 0.002},
      {0.030, -0.030, 0.000, 0.010, 0.008, -0.003},
      {0.008, -0.042, 0.004, 0.011, 0.002, 0.002},
      {0.034, 0.026, -0.004, -0.007, 0.009, 0.003},
  };
  Pose pose;
  s.path.push_back(Twist::Zero());
  for (const auto& inc : increments) {
    pose = se3_exp(Twist(inc)) * pose;
    s.path.push_back(se3_log(pose));
  }
  return s;
}

SceneSpec two_plane_spec() {
  SceneSpec s;
  s.kind = SceneKind::kTwoPlanes;
  s.width = 64;
  s.height = 48;
  s.factor = 1;
  s.K = {60.0, 60.0, 31.5, 23.5};
  s.background_inverse_depth = 0.5;
  s.foreground_inverse_depth = 1.0;
  s.foreground_rect = {-0.3, 0.3, -0.25, 0.25};
  s.noise_sigma = 0.0;
  s.render_samples = 8;
  s.path = {Twist::Zero(), (Twist() << -0.1, 0, 0, 0, 0, 0).finished()};
  return s;
}

RenderedView render_view(const SceneSpec& spec, const Pose& pose) {
  const Scene scene(spec);
  RenderedView out{Image(spec.width, spec.height, 3), InverseDepthMap(spec.width, spec.height, 1.0)};
  const Mat3 Rt = pose.rotation.transpose();
  const Vec3 origin = pose.center();
  parallel_for(spec.height, [&](std::size_t yb, std::size_t ye) {
    for (std::size_t y = yb; y < ye; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const Vec3 dir = Rt * spec.K.ray(x, static_cast<double>(y));
        const Hit hit = scene.cast(origin, dir);
        require(std::isfinite(hit.t), ErrorCode::kInvalidArgument,
                "scene: a camera ray misses every surface");
        for (int c = 0; c < 3; ++c) out.image.at(x, static_cast<int>(y), c) = hit.color[c];
        out.depth.at(x, static_cast<int>(y)) = 1.0 / hit.t;
      }
  });
  return out;
}

GroundTruthBundle render_scene(const SceneSpec& spec) {
  spec.validate();
  GroundTruthBundle b;
  b.poses = spec.poses();
  for (const Pose& p : b.poses) {
    RenderedView v = render_view(spec, p);
    b.latent.push_back(std::move(v.image));
    b.depth.push_back(std::move(v.depth));
  }
  return b;
}

void render_observations(GroundTruthBundle& bundle, const SceneSpec& spec) {
  spec.validate();
  CaptureModel timing;
  timing.samples = spec.render_samples;
  timing.exposure_fraction = spec.exposure_fraction;
  const auto alphas = sample_times(timing, 1.0, 0.0);
  const int T = static_cast<int>(bundle.poses.size());
  bundle.observed.assign(T, Image());
  bundle.valid.assign(T, {});
  for (int t = 0; t < T; ++t) {
    const Pose prev = previous_pose(bundle.poses, t);
    const Twist delta = se3_log(bundle.poses[t] * prev.inverse());
    // Running mean: identical views average to themselves exactly.
    Image mean(spec.width, spec.height, 3);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      const double alpha = alphas[k];
      const Pose tau = alpha == 1.0 ? bundle.poses[t] : se3_exp(alpha * delta) * prev;
      const Image view = alpha == 1.0 && !bundle.latent.empty() ? bundle.latent[t]
                                                                : render_view(spec, tau).image;
      auto m = mean.data();
      const auto v = view.data();
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += (v[i] - m[i]) / static_cast<double>(k + 1);
    }
    Image obs = downsample_box(mean, spec.factor);

    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double& v : obs.data()) {
      const double n = noise(rng);
      v = std::clamp(v + spec.noise_sigma * n, 0.0, 1.0);
    }
    bundle.valid[t].assign(obs.pixel_count(), 1);
    bundle.observed[t] = std::move(obs);
  }
}

CaptureModel capture_model_for(const SceneSpec& spec, int samples) {
  CaptureModel m;
  m.K = spec.K;
  m.samples = samples;
  m.exposure_fraction = spec.exposure_fraction;
  m.factor = spec.factor;
  return m;
}

}  // namespace jdsr
