#pragma once

#include <cstdint>
#include <vector>

#include "affordkit/core/types.hpp"
#include "affordkit/ingest/scene.hpp"

namespace affordkit::ingest {

/// Synthetic scene presets.
///   FrontoWall: cameras translate along an arc with identity rotations in
///     front of a fronto-parallel wall. Depth is constant per frame, so scale
///     calibration and warping residuals are exact to double rounding.
///   Bowl: cameras sweep an arc looking into a concave spherical bowl; the
///     curved surface gives full pose and per-frame-scale observability.
enum class SynthGeometry { FrontoWall, Bowl };

struct SynthConfig {
  int frames = 6;
  int landmarks = 150;
  double scale = 2.0;           // true global scale s_g (metric = s_g * world units)
  double depth_noise = 0.0;     // multiplicative stddev on rendered depth
  double pose_noise_rot = 0.0;  // radians, applied to the stored pose estimates
  double pose_noise_trans = 0.0;  // world units, applied to the stored pose estimates

  int width = 400, height = 300;
  double focal = 210.0;

  SynthGeometry geometry = SynthGeometry::Bowl;

  bool hand = true;
  double hand_radius = 0.025;  // world units
  // C1 hand path: quadratic Bezier through these world-frame control points.
  Vec3 hand_start{0.06, 0.05, 0.62};
  Vec3 hand_mid{0.13, 0.07, 0.72};
  Vec3 hand_end{0.20, 0.10, 0.84};

  // camera arc
  double arc_span = 0.25;   // world units traveled across the sequence
  double arc_bump = 0.06;   // lateral C1 bow of the path
};

/// What the generator knows exactly: true poses and scales, and the hand
/// center path expressed in metric frame-0 coordinates.
struct GroundTruth {
  double s_g = 1.0;
  std::vector<double> scales;
  std::vector<geom::Posed> poses;
  Trajectory hand_trajectory;
};

/// Generates a deterministic synthetic scene with known ground truth.
/// Rendered depth agrees with the landmark geometry by construction; the
/// hand blob's silhouette defines the hand mask and its rendered depth is the
/// blob center depth, so mask centroid + median depth recover the center.
std::pair<SceneBundle, GroundTruth> synth_scene(const SynthConfig& config, std::uint64_t seed);

}  // namespace affordkit::ingest
