#include "affordkit/metric/scale.hpp"

#include <cmath>

#include "affordkit/core/error.hpp"

namespace affordkit::metric {

ScaleSolution solve_global_scale(const ingest::SceneBundle& scene) {
  double num = 0.0, den = 0.0;
  int used = 0;
  for (const auto& lm : scene.landmarks) {
    for (const auto& obs : lm.observations) {
      const auto& frame = scene.frames[obs.frame];
      const auto& K = frame.intrinsics;
      const int c = static_cast<int>(std::lround(obs.pixel.x()));
      const int r = static_cast<int>(std::lround(obs.pixel.y()));
      if (c < 0 || c >= K.width || r < 0 || r >= K.height) continue;
      if (!scene.static_masks[obs.frame](r, c)) continue;
      const double predicted = frame.depth(r, c);
      if (!std::isfinite(predicted) || predicted <= 0.0) continue;
      const double d = (frame.pose_init.inverse() * lm.position).z();
      if (d <= 1e-9) continue;
      num += predicted * d;
      den += d * d;
      ++used;
    }
  }
  if (used == 0)
    throw Error(ErrorCode::NoValidObservations, "no static landmark observation with valid depth");
  if (!(num > 0.0) || !(den > 0.0))
    throw Error(ErrorCode::NonPositiveScale, "degenerate depth structure");

  ScaleSolution solution;
  solution.s_g = num / den;
  solution.inlier_count = used;

  double sq = 0.0;
  for (const auto& lm : scene.landmarks) {
    for (const auto& obs : lm.observations) {
      const auto& frame = scene.frames[obs.frame];
      const auto& K = frame.intrinsics;
      const int c = static_cast<int>(std::lround(obs.pixel.x()));
      const int r = static_cast<int>(std::lround(obs.pixel.y()));
      if (c < 0 || c >= K.width || r < 0 || r >= K.height) continue;
      if (!scene.static_masks[obs.frame](r, c)) continue;
      const double predicted = frame.depth(r, c);
      if (!std::isfinite(predicted) || predicted <= 0.0) continue;
      const double d = (frame.pose_init.inverse() * lm.position).z();
      if (d <= 1e-9) continue;
      const double e = predicted - solution.s_g * d;
      sq += e * e;
    }
  }
  solution.residual = sq / used;
  return solution;
}

int select_reference_frame(const ingest::SceneBundle& scene) {
  if (scene.frame_count() < 2)
    throw Error(ErrorCode::InvalidArgument, "need at least 2 frames");
  std::vector<int> covisible(scene.frames.size(), 0);
  for (const auto& lm : scene.landmarks) {
    if (lm.observations.size() < 2) continue;
    for (const auto& obs : lm.observations) ++covisible[obs.frame];
  }
  int best = 0;
  for (int i = 1; i < scene.frame_count(); ++i)
    if (covisible[i] > covisible[best]) best = i;
  return best;
}

}  // namespace affordkit::metric
