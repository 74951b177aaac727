#pragma once

#include <utility>

#include "affordkit/core/types.hpp"
#include "affordkit/tsdf/volume.hpp"

namespace affordkit::costs {

/// Test-time guidance configuration. The volume must stay frozen while
/// guidance runs; all evaluations are read-only.
struct GuidanceConfig {
  double lambda_goal = 1.0;
  double lambda_collide = 1.0;
  double lambda_normal = 0.1;
  Points3 goals;         // candidate goal points (meters)
  Points3 agent_points;  // agent/object surface samples at the first waypoint
  Vec3 normal = Vec3::UnitZ();
  const tsdf::TsdfVolume* volume = nullptr;

  void validate() const;
};

/// Weighted cost decomposition with the gradient w.r.t. the waypoints.
/// The first waypoint is held fixed during guidance, so its gradient row is
/// identically zero.
struct CostReport {
  double total = 0.0;
  double goal = 0.0;
  double collide = 0.0;
  double normal = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 3> gradient;
};

/// Squared distance from the trajectory endpoint to the nearest goal
/// (lowest index on ties). Gradient is nonzero only at the endpoint.
std::pair<double, Trajectory> cost_goal(const Trajectory& traj, const Points3& goals);

/// Mean truncated-distance penetration of the agent point cloud swept along
/// the trajectory, relative to the first waypoint. Unobserved or free space
/// contributes nothing.
std::pair<double, Trajectory> cost_collide(const Trajectory& traj, const Points3& agent_points,
                                           const tsdf::TsdfVolume& volume);

/// Mean squared deviation of each waypoint direction (from the first
/// waypoint) to the contact normal, with the sign chosen per waypoint.
std::pair<double, Trajectory> cost_normal(const Trajectory& traj, const Vec3& normal);

/// Weighted sum of the three guidance terms. Terms with zero weight are
/// skipped and reported as zero.
CostReport cost_total(const Trajectory& traj, const GuidanceConfig& config);

/// Deterministic sample of a gripper primitive around `center`.
enum class AgentPrimitive { Sphere, Box };
Points3 gripper_points(AgentPrimitive primitive, int count, double radius, const Vec3& center);

/// Near-surface voxel centers within `radius` of `center`, at most
/// `max_count`, in deterministic grid order.
Points3 surface_points_near(const tsdf::TsdfVolume& volume, const Vec3& center, double radius,
                            int max_count);

}  // namespace affordkit::costs
