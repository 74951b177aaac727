#include "affordkit/costs/guidance.hpp"

#include <cmath>

#include "affordkit/core/error.hpp"

namespace affordkit::costs {

void GuidanceConfig::validate() const {
  if (lambda_goal < 0.0 || lambda_collide < 0.0 || lambda_normal < 0.0)
    throw Error(ErrorCode::InvalidArgument, "guidance weights must be non-negative");
  if (lambda_goal > 0.0 && goals.rows() == 0)
    throw Error(ErrorCode::EmptyGoals, "goal guidance enabled without goals");
  if (lambda_collide > 0.0 && agent_points.rows() == 0)
    throw Error(ErrorCode::EmptyAgentPoints, "collision guidance enabled without agent points");
  if (lambda_collide > 0.0 && volume == nullptr)
    throw Error(ErrorCode::InvalidArgument, "collision guidance needs a frozen volume");
  if (lambda_normal > 0.0 && std::abs(normal.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, "contact normal must be unit length");
}

std::pair<double, Trajectory> cost_goal(const Trajectory& traj, const Points3& goals) {
  if (goals.rows() == 0) throw Error(ErrorCode::EmptyGoals, "no goal points");
  const Vec3 endpoint = traj.row(traj.rows() - 1).transpose();
  int best = 0;
  double best_sq = (goals.row(0).transpose() - endpoint).squaredNorm();
  for (Eigen::Index n = 1; n < goals.rows(); ++n) {
    const double sq = (goals.row(n).transpose() - endpoint).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = static_cast<int>(n);
    }
  }
  Trajectory grad = Trajectory::Zero(traj.rows(), 3);
  grad.row(traj.rows() - 1) = 2.0 * (endpoint - goals.row(best).transpose()).transpose();
  return {best_sq, grad};
}

std::pair<double, Trajectory> cost_collide(const Trajectory& traj, const Points3& agent_points,
                                           const tsdf::TsdfVolume& volume) {
  if (agent_points.rows() == 0) throw Error(ErrorCode::EmptyAgentPoints, "no agent points");
  if (traj.rows() < 2) throw Error(ErrorCode::InvalidArgument, "trajectory needs >= 2 waypoints");

  const Eigen::Index horizon = traj.rows();
  const double norm = 1.0 / (static_cast<double>(horizon - 1) * agent_points.rows());
  const Vec3 start = traj.row(0).transpose();

  double cost = 0.0;
  Trajectory grad = Trajectory::Zero(horizon, 3);
  for (Eigen::Index h = 1; h < horizon; ++h) {
    const Vec3 offset = traj.row(h).transpose() - start;
    for (Eigen::Index i = 0; i < agent_points.rows(); ++i) {
      const Vec3 p = agent_points.row(i).transpose() + offset;
      const double u = tsdf::query(volume, p);
      if (u < 0.0) {
        cost += -u;
        grad.row(h) -= tsdf::query_gradient(volume, p).transpose();
      }
    }
  }
  grad *= norm;
  grad.row(0).setZero();  // the start waypoint is never guided
  return {cost * norm, grad};
}

std::pair<double, Trajectory> cost_normal(const Trajectory& traj, const Vec3& normal) {
  if (std::abs(normal.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, "normal must be unit length");
  const Eigen::Index horizon = traj.rows();
  const Vec3 start = traj.row(0).transpose();
  const double norm_factor = 1.0 / static_cast<double>(horizon - 1);

  double cost = 0.0;
  Trajectory grad = Trajectory::Zero(horizon, 3);
  for (Eigen::Index h = 1; h < horizon; ++h) {
    const Vec3 delta = traj.row(h).transpose() - start;
    const double len = delta.norm();
    if (len <= 1e-9)
      throw Error(ErrorCode::DegenerateSegment,
                  "waypoint " + std::to_string(h) + " coincides with the start");
    const Vec3 dir = delta / len;
    const double dot = dir.dot(normal);
    const double sign = dot >= 0.0 ? 1.0 : -1.0;  // ties take +1
    cost += 2.0 - 2.0 * sign * dot;
    // d/d tau_h of -2 s (dir . n), through the normalization
    grad.row(h) += (-2.0 * sign / len) * (normal - dot * dir).transpose();
  }
  grad *= norm_factor;
  grad.row(0).setZero();
  return {cost * norm_factor, grad};
}

CostReport cost_total(const Trajectory& traj, const GuidanceConfig& config) {
  config.validate();
  CostReport report;
  report.gradient = Trajectory::Zero(traj.rows(), 3);
  if (config.lambda_goal > 0.0) {
    auto [value, grad] = cost_goal(traj, config.goals);
    report.goal = value;
    report.gradient += config.lambda_goal * grad;
  }
  if (config.lambda_collide > 0.0) {
    auto [value, grad] = cost_collide(traj, config.agent_points, *config.volume);
    report.collide = value;
    report.gradient += config.lambda_collide * grad;
  }
  if (config.lambda_normal > 0.0) {
    auto [value, grad] = cost_normal(traj, config.normal);
    report.normal = value;
    report.gradient += config.lambda_normal * grad;
  }
  report.total = config.lambda_goal * report.goal + config.lambda_collide * report.collide +
                 config.lambda_normal * report.normal;
  return report;
}

Points3 gripper_points(AgentPrimitive primitive, int count, double radius, const Vec3& center) {
  if (count <= 0) throw Error(ErrorCode::InvalidArgument, "count must be positive");
  Points3 points(count, 3);
  if (primitive == AgentPrimitive::Sphere) {
    // Fibonacci sphere: deterministic, near-uniform
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double y = count == 1 ? 0.0 : 1.0 - 2.0 * i / (count - 1.0);
      const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
      const double theta = golden * i;
      points.row(i) =
          (center + radius * Vec3(r * std::cos(theta), y, r * std::sin(theta))).transpose();
    }
  } else {
    // axis-aligned box lattice
    const int side = std::max(1, static_cast<int>(std::ceil(std::cbrt(double(count)))));
    int written = 0;
    for (int z = 0; z < side && written < count; ++z)
      for (int y = 0; y < side && written < count; ++y)
        for (int x = 0; x < side && written < count; ++x) {
          const auto map = [&](int i) {
            return side == 1 ? 0.0 : radius * (2.0 * i / (side - 1.0) - 1.0);
          };
          points.row(written++) = (center + Vec3(map(x), map(y), map(z))).transpose();
        }
  }
  return points;
}

Points3 surface_points_near(const tsdf::TsdfVolume& volume, const Vec3& center, double radius,
                            int max_count) {
  std::vector<Vec3> found;
  const double band = 0.75 * volume.voxel_size / volume.truncation;
  for (int iz = 0; iz < volume.dims.z() && static_cast<int>(found.size()) < max_count; ++iz)
    for (int iy = 0; iy < volume.dims.y() && static_cast<int>(found.size()) < max_count; ++iy)
      for (int ix = 0; ix < volume.dims.x() && static_cast<int>(found.size()) < max_count; ++ix) {
        const std::size_t idx = volume.index(ix, iy, iz);
        if (volume.weights[idx] <= 0.0) continue;
        if (std::abs(volume.values[idx]) > band) continue;
        const Vec3 p = volume.voxel_center(ix, iy, iz);
        if ((p - center).norm() <= radius) found.push_back(p);
      }
  Points3 out(found.size(), 3);
  for (std::size_t i = 0; i < found.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = found[i].transpose();
  return out;
}

}  // namespace affordkit::costs
