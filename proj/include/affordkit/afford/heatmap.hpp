#pragma once

#include <utility>
#include <vector>

#include "affordkit/core/types.hpp"
#include "affordkit/ingest/scene.hpp"

namespace affordkit::afford {

/// Per-pixel probability map built from projected label points. goal_depth
/// carries the median projected depth (used by the goal variant only).
struct Heatmap {
  ImageXd grid;            // height x width, values in [0, 1], max is 1
  double goal_depth = 0.0;
};

/// Equal-weight isotropic Gaussian blob per projected point, normalized so
/// the maximum is 1.
Heatmap fit_heatmap(const Points3& points, const ingest::FrameObservation& frame,
                    double sigma_px = 8.0);

/// Supervision losses for the coarse predictors: mean per-pixel binary
/// cross-entropy, plus the squared goal-depth error weighted by lambda_d for
/// the goal head. The auxiliary vector-field term is not modeled here and is
/// reported as zero with the flag set.
struct CoarseLosses {
  double goal = 0.0;
  double contact = 0.0;
  double vector_field = 0.0;
  bool vector_field_omitted = true;
};

CoarseLosses coarse_losses(const Heatmap& pred_goal, const Heatmap& gt_goal,
                           const Heatmap& pred_contact, const Heatmap& gt_contact,
                           double lambda_d = 1.0);

struct ScoredPoints {
  Points3 points;
  Eigen::VectorXd scores;
};

/// Lifts the top-n heatmap pixels (value descending, row-major on ties) to 3D
/// through the depth map. Pixels with invalid depth are not candidates.
ScoredPoints lift_heatmap_to_points(const Heatmap& heatmap, const ImageXd& depth,
                                    const geom::Intrinsicsd& K, int n, double threshold);

/// Goal variant: lifts through the predicted constant goal depth instead of
/// the depth map.
ScoredPoints lift_heatmap_to_points(const Heatmap& heatmap, double goal_depth,
                                    const geom::Intrinsicsd& K, int n, double threshold);

}  // namespace affordkit::afford
