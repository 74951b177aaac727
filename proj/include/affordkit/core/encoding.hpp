#pragma once

#include <Eigen/Core>
#include <cmath>

namespace affordkit {

/// Sinusoidal positional encoding. Each scalar expands to dims_per_scalar
/// values (half sine, half cosine) at frequencies spaced geometrically
/// from 1 to 1e4.
inline Eigen::VectorXd positional_encoding(const Eigen::VectorXd& scalars,
                                           int dims_per_scalar = 32) {
  const int half = dims_per_scalar / 2;
  Eigen::VectorXd out(scalars.size() * dims_per_scalar);
  for (Eigen::Index s = 0; s < scalars.size(); ++s) {
    for (int j = 0; j < half; ++j) {
      const double freq = std::pow(10.0, 4.0 * j / std::max(1, half - 1));
      out[s * dims_per_scalar + 2 * j] = std::sin(freq * scalars[s]);
      out[s * dims_per_scalar + 2 * j + 1] = std::cos(freq * scalars[s]);
    }
  }
  return out;
}

inline Eigen::VectorXd positional_encoding(double scalar, int dims_per_scalar = 32) {
  Eigen::VectorXd v(1);
  v[0] = scalar;
  return positional_encoding(v, dims_per_scalar);
}

}  // namespace affordkit
