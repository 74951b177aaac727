#pragma once

#include <Eigen/Core>
#include <cmath>

#include "affordkit/core/error.hpp"
#include "affordkit/geom/intrinsics.hpp"

namespace affordkit::geom {

constexpr double kMinProjectionDepth = 1e-6;

/// Pinhole projection of a camera-frame point to continuous pixels.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> project(const Eigen::Matrix<Scalar, 3, 1>& point,
                                    const Intrinsics<Scalar>& K) {
  if (!(point.z() > Scalar(kMinProjectionDepth)))
    throw Error(ErrorCode::NonPositiveDepth, "point at or behind the camera");
  return {K.fx * point.x() / point.z() + K.cx, K.fy * point.y() / point.z() + K.cy};
}

/// Inverse projection at a given z-depth.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> backproject(const Eigen::Matrix<Scalar, 2, 1>& pixel,
                                        Scalar depth, const Intrinsics<Scalar>& K) {
  if (!(depth > Scalar(0)) || !std::isfinite(static_cast<double>(depth)))
    throw Error(ErrorCode::InvalidDepth, "depth must be positive and finite");
  return {(pixel.x() - K.cx) / K.fx * depth, (pixel.y() - K.cy) / K.fy * depth, depth};
}

}  // namespace affordkit::geom
