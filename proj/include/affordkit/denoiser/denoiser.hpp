#pragma once

#include <Eigen/Core>

#include "affordkit/core/types.hpp"

namespace affordkit::denoiser {

/// Everything a denoiser sees at one reverse step: the noisy trajectory, the
/// per-waypoint spatial features sampled from the scene volume, the encoded
/// step index, and the task conditioning vector.
struct DenoiserInput {
  Trajectory tau_k;                     // H x 3
  Eigen::MatrixXd features;             // H x C_m
  Eigen::VectorXd step_encoding;        // PE(k)
  Eigen::VectorXd conditioning;         // encoded goal/contact (+ optional context)
  int k = 0;
};

/// Clean-sample predictor interface. Implementations must be pure so chains
/// can evaluate them concurrently.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual int horizon() const = 0;
  virtual int feature_dims() const = 0;

  /// Predicts the unnoised trajectory from the noisy one.
  virtual Trajectory predict_x0(const DenoiserInput& input) const = 0;

  /// Whether input_jacobian is available (needed for gradient guidance
  /// chained through the denoiser).
  virtual bool has_input_jacobian() const { return false; }

  /// Jacobians of the flattened prediction w.r.t. the flattened noisy
  /// trajectory and feature inputs. Flattening is waypoint-major: element
  /// h*3+axis for trajectories, h*C_m+channel for features. Either output
  /// pointer may be null.
  virtual void input_jacobian(const DenoiserInput& input, Eigen::MatrixXd* d_tau,
                              Eigen::MatrixXd* d_features) const;
};

inline void Denoiser::input_jacobian(const DenoiserInput&, Eigen::MatrixXd*,
                                     Eigen::MatrixXd*) const {
  throw std::logic_error("denoiser does not provide an input jacobian");
}

}  // namespace affordkit::denoiser
