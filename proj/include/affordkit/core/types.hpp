#pragma once

#include <Eigen/Core>

namespace affordkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Ordered 3D waypoints, one row per step, expressed in the first camera's frame (meters).
using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Generic point set, one row per point (meters).
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Row-major image-shaped arrays: (row, col) = (v, u).
using ImageXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ImageXb = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace affordkit
