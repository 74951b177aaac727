#pragma once

#include <Eigen/Core>

#include "affordkit/core/error.hpp"

namespace affordkit::geom {

/// Pinhole intrinsics. Pixel convention: (u, v) = (column, row), continuous
/// coordinates with pixel centers at integer positions.
template <typename Scalar>
struct Intrinsics {
  Scalar fx = Scalar(0), fy = Scalar(0);
  Scalar cx = Scalar(0), cy = Scalar(0);
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > Scalar(0)) || !(fy > Scalar(0)))
      throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
    if (!(cx >= Scalar(0)) || !(cx < Scalar(width)) || !(cy >= Scalar(0)) ||
        !(cy < Scalar(height)))
      throw Error(ErrorCode::InvalidArgument, "principal point outside image");
  }

  /// Continuous pixel lies inside the image domain [-0.5, size-0.5).
  bool in_image(Scalar u, Scalar v) const {
    return u >= Scalar(-0.5) && u < Scalar(width) - Scalar(0.5) && v >= Scalar(-0.5) &&
           v < Scalar(height) - Scalar(0.5);
  }

  /// Pixel lies inside the hull of pixel centers, so bilinear lookups have
  /// four neighbors.
  bool interpolable(Scalar u, Scalar v) const {
    return u >= Scalar(0) && u <= Scalar(width - 1) && v >= Scalar(0) &&
           v <= Scalar(height - 1);
  }
};

using Intrinsicsd = Intrinsics<double>;
using Intrinsicsf = Intrinsics<float>;

}  // namespace affordkit::geom
