#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affordkit/core/types.hpp"
#include "affordkit/geom/intrinsics.hpp"
#include "affordkit/geom/pose.hpp"

namespace affordkit::ingest {

/// One video frame worth of precomputed inputs: predicted metric depth,
/// hand / in-contact-object masks, and the scale-unaware world-from-camera
/// pose estimate. Depth is meters with NaN marking invalid pixels; mask
/// bytes are nonzero where masked.
struct FrameObservation {
  int index = 0;
  ImageXd depth;
  ImageXb hand_mask;
  ImageXb object_mask;
  geom::Posed pose_init;
  geom::Intrinsicsd intrinsics;
};

struct LandmarkObservation {
  int frame = 0;
  Vec2 pixel = Vec2::Zero();
};

/// Sparse world-frame point (scale-unaware units) with its pixel track.
struct Landmark {
  int id = 0;
  Vec3 position = Vec3::Zero();
  std::vector<LandmarkObservation> observations;
};

/// A loaded scene. static_masks[i] is 1 exactly where neither the hand nor
/// the object mask covers the pixel.
struct SceneBundle {
  std::vector<FrameObservation> frames;
  std::vector<Landmark> landmarks;
  std::vector<ImageXb> static_masks;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

/// Recomputes static_masks from the hand/object masks.
void compute_static_masks(SceneBundle& bundle);

/// Bilinear depth lookup at a continuous pixel. Empty when the pixel is not
/// interpolable or any of the four neighbors is invalid.
std::optional<double> depth_at(const ImageXd& depth, const geom::Intrinsicsd& K, const Vec2& pixel);

/// Loads a scene manifest plus all files it references, validating dimensions
/// and landmark observations.
SceneBundle load_scene(const std::filesystem::path& manifest_path);

/// Writes a bundle as manifest + depth (raw float32) + masks (PGM) +
/// landmarks.json so load_scene round-trips it.
void write_scene(const SceneBundle& bundle, const std::filesystem::path& directory);

}  // namespace affordkit::ingest
