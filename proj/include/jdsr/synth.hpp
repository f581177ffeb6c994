#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jdsr/capture.hpp"
#include "jdsr/geometry.hpp"
#include "jdsr/image.hpp"

namespace jdsr {

enum class SceneKind { kPlane, kTwoPlanes, kBox };
enum class TextureKind { kNoise, kChecker, kPng };

/// Procedural scene: an infinite fronto-parallel background plane at
/// z = 1 / background_inverse_depth (world frame) plus, for kTwoPlanes and
/// kBox, an axis-aligned foreground rectangle or box whose front face sits at
/// z = 1 / foreground_inverse_depth. Camera poses are given as absolute
/// twists: P_t = exp(path[t]).
struct SceneSpec {
  SceneKind kind = SceneKind::kBox;
  TextureKind texture = TextureKind::kNoise;
  std::string texture_path;
  double texture_scale = 1.0;

  int width = 128;  ///< latent (HR) resolution
  int height = 96;
  int factor = 2;
  Intrinsics K{100.0, 100.0, 63.5, 47.5};

  double background_inverse_depth = 0.8;
  double foreground_inverse_depth = 1.2;
  /// World-space extent of the foreground object: x0 x1 y0 y1; box_depth is
  /// its extent along z (ignored for kTwoPlanes).
  std::vector<double> foreground_rect{-0.18, 0.16, -0.14, 0.20};
  double box_depth = 0.2;

  std::vector<Twist> path;
  double exposure_fraction = 0.5;
  int render_samples = 64;
  double noise_sigma = 0.005;
  std::uint64_t seed = 1;

  int frames() const { return static_cast<int>(path.size()); }
  std::vector<Pose> poses() const;
  void validate() const;
};

/// 128x96 box-over-plane desk scene, 5 frames, factor 2, per-frame twist
/// norms of roughly 0.045 with changing direction.
SceneSpec default_desk_spec();

/// Thin foreground rectangle in front of the background, lateral motion only.
SceneSpec two_plane_spec();

struct GroundTruthBundle {
  std::vector<Image> latent;
  std::vector<InverseDepthMap> depth;
  std::vector<Pose> poses;
  std::vector<Image> observed;
  std::vector<std::vector<std::uint8_t>> valid;
};

/// Ray-casts one HR view: colour and exact inverse depth per pixel.
struct RenderedView {
  Image image;
  InverseDepthMap depth;
};
RenderedView render_view(const SceneSpec& spec, const Pose& pose);

/// Latent images (the shutter-close view), depths and poses.
GroundTruthBundle render_scene(const SceneSpec& spec);

/// Adds observations: M_render analytic intermediate views averaged, box
/// downsampled, Gaussian noise from a per-frame seeded stream, clipped.
void render_observations(GroundTruthBundle& bundle, const SceneSpec& spec);

/// Capture model matching the renderer with `samples` discretization steps.
CaptureModel capture_model_for(const SceneSpec& spec, int samples);

}  // namespace jdsr
