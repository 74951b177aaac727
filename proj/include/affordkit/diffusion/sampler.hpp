#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "affordkit/core/rng.hpp"
#include "affordkit/core/types.hpp"
#include "affordkit/costs/guidance.hpp"
#include "affordkit/denoiser/denoiser.hpp"
#include "affordkit/diffusion/schedule.hpp"

namespace affordkit::diffusion {

/// Closed-form forward corruption to step k. Returns the corrupted
/// trajectory and the injected noise.
std::pair<Trajectory, Trajectory> forward_noise(const Trajectory& tau0, int k,
                                                const DiffusionSchedule& schedule, Rng& rng);

/// One ancestral reverse step using the clean-sample parameterization of the
/// posterior mean. No noise is added at k = 1.
Trajectory posterior_step(const Trajectory& tau_k, const Trajectory& x0_pred, int k,
                          const DiffusionSchedule& schedule, Rng& rng);

/// Reconstruction guidance: shifts the clean-sample estimate down the cost
/// gradient, scaled by the step's posterior variance. The first waypoint is
/// never modified.
Trajectory guide(const Trajectory& x0_pred, const Trajectory& cost_gradient, int k,
                 const DiffusionSchedule& schedule);

/// How the cost gradient reaches the noisy trajectory: either applied to the
/// clean estimate directly (identity Jacobian) or chained through the
/// denoiser's input sensitivity.
enum class GuidanceMode { DirectOnX0, ThroughDenoiser };

struct SampleOptions {
  int guide_steps = 1;  // gradient applications per denoising step
  GuidanceMode mode = GuidanceMode::DirectOnX0;
  const tsdf::TsdfVolume* feature_volume = nullptr;  // per-waypoint spatial feature source
  int threads = 0;                                   // 0 = auto (capped by AFFORDKIT_THREADS)
  int pe_dims = 32;
};

struct SampleBatch {
  std::vector<Trajectory> trajectories;
  std::vector<costs::CostReport> costs;
  std::vector<std::uint64_t> seeds;
};

/// Draws n_samples independent reverse-process chains with cost guidance and
/// evaluates the final cost of each sample. With all guidance weights zero
/// this reproduces the unguided sampler bit-exactly under the same seed.
SampleBatch guided_sample(const denoiser::Denoiser& den, const Eigen::VectorXd& conditioning,
                          const costs::GuidanceConfig& config,
                          const DiffusionSchedule& schedule, int n_samples, std::uint64_t seed,
                          const SampleOptions& options = {});

/// Indices sorted by ascending total cost, stable on ties.
std::vector<int> rank_by_cost(const SampleBatch& batch);

}  // namespace affordkit::diffusion
