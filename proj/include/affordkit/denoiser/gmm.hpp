#pragma once

#include <vector>

#include "affordkit/denoiser/denoiser.hpp"
#include "affordkit/diffusion/schedule.hpp"

namespace affordkit::denoiser {

/// Isotropic Gaussian mixture over trajectories; the analytic oracle prior
/// for exercising the sampler without a trained network.
struct GmmPrior {
  Eigen::VectorXd weights;            // simplex
  std::vector<Trajectory> means;      // one H x 3 mean per component
  Eigen::VectorXd variances;          // per-component isotropic variance

  void validate() const;
};

/// Exact conditional mean of the clean trajectory given the noisy one under
/// the mixture prior and the closed-form forward marginal. Responsibilities
/// are evaluated in log space.
Trajectory analytic_denoise(const GmmPrior& prior, const Trajectory& tau_k, int k,
                            const diffusion::DiffusionSchedule& schedule);

/// Denoiser adapter around analytic_denoise. Ignores features and
/// conditioning; provides the exact input Jacobian.
class AnalyticGmmDenoiser : public Denoiser {
 public:
  AnalyticGmmDenoiser(GmmPrior prior, const diffusion::DiffusionSchedule& schedule);

  int horizon() const override { return static_cast<int>(prior_.means.front().rows()); }
  int feature_dims() const override { return 0; }
  Trajectory predict_x0(const DenoiserInput& input) const override;
  bool has_input_jacobian() const override { return true; }
  void input_jacobian(const DenoiserInput& input, Eigen::MatrixXd* d_tau,
                      Eigen::MatrixXd* d_features) const override;

 private:
  GmmPrior prior_;
  const diffusion::DiffusionSchedule& schedule_;
};

}  // namespace affordkit::denoiser
