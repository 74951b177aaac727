#pragma once

#include <string>
#include <utility>

#include "affordkit/ingest/scene.hpp"
#include "affordkit/metric/refine.hpp"

namespace affordkit::afford {

/// Extracted interaction labels, all in metric frame-0 camera coordinates.
struct AffordanceSample {
  Points3 contact_points;  // where interaction begins (object surface)
  Points3 goal_points;     // where the motion should end (free space)
  Trajectory trajectory;   // hand center path, one row per frame
  std::string instruction;
};

/// Hand center path: per frame, the hand-mask centroid pixel back-projected
/// at the median hand depth, rescaled by the per-frame scale, and carried
/// into frame 0 through the refined scale-corrected relative poses.
Trajectory extract_trajectory(const ingest::SceneBundle& scene,
                              const metric::RefinementResult& refined);

/// Contact points from the first frame's hand pixels and goal points from the
/// last frame's (carried into frame 0), each uniformly downsampled to exactly
/// min(requested, available) points. Downsampling bins points into voxel
/// cells, keeps the member nearest each cell mean, and if still too many runs
/// farthest-point selection seeded at the candidate nearest the global
/// centroid.
std::pair<Points3, Points3> extract_contact_goal(const ingest::SceneBundle& scene,
                                                 const metric::RefinementResult& refined,
                                                 int n_contact, int n_goal,
                                                 double voxel = 0.01);

/// The downsampler used by extract_contact_goal, exposed for reuse and tests.
Points3 downsample_uniform(const Points3& points, int target, double voxel);

}  // namespace affordkit::afford
