#pragma once

#include "affordkit/ingest/scene.hpp"

namespace affordkit::metric {

struct ScaleSolution {
  double s_g = 1.0;       // recovered global scale
  double residual = 0.0;  // mean squared depth error at the optimum (m^2)
  int inlier_count = 0;   // landmark observations that contributed
};

/// Closed-form global scale: the depth residual is quadratic in the scale, so
/// the minimizer is sum(m * dhat * d) / sum(m * d^2) over landmark
/// observations in static regions with valid predicted depth. dhat is the
/// depth map value at the observation pixel, d the landmark's camera-frame
/// depth under the scale-unaware pose.
ScaleSolution solve_global_scale(const ingest::SceneBundle& scene);

/// Frame observing the most landmarks that are also seen elsewhere; ties go
/// to the lowest index.
int select_reference_frame(const ingest::SceneBundle& scene);

}  // namespace affordkit::metric
