#include "affordkit/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affordkit/core/encoding.hpp"
#include "affordkit/core/error.hpp"
#include "affordkit/core/parallel.hpp"

namespace affordkit::diffusion {

namespace {

Trajectory standard_normal(Eigen::Index rows, Rng& rng) {
  Trajectory n(rows, 3);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) n(r, c) = rng.normal();
  return n;
}

Eigen::MatrixXd waypoint_features(const tsdf::TsdfVolume* volume, const Trajectory& tau,
                                  int feature_dims) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(tau.rows(), feature_dims);
  if (volume && feature_dims > 0)
    for (Eigen::Index h = 0; h < tau.rows(); ++h)
      f(h, 0) = tsdf::query(*volume, tau.row(h).transpose());
  return f;
}

// gradient w.r.t. the noisy input, chained through the denoiser and the
// feature lookup
Trajectory chain_through_denoiser(const denoiser::Denoiser& den, const denoiser::DenoiserInput& input,
                                  const Trajectory& cost_gradient,
                                  const tsdf::TsdfVolume* volume) {
  const Eigen::Index horizon = input.tau_k.rows();
  Eigen::MatrixXd d_tau, d_feat;
  den.input_jacobian(input, &d_tau, &d_feat);

  Eigen::VectorXd g_flat(horizon * 3);
  for (Eigen::Index h = 0; h < horizon; ++h)
    g_flat.segment<3>(h * 3) = cost_gradient.row(h).transpose();

  Eigen::VectorXd chained = d_tau.transpose() * g_flat;
  if (volume && d_feat.size() > 0 && den.feature_dims() > 0) {
    // features also depend on the noisy waypoints through the volume lookup
    Eigen::VectorXd g_feat = d_feat.transpose() * g_flat;  // horizon * C_m
    for (Eigen::Index h = 0; h < horizon; ++h) {
      const Vec3 du = tsdf::query_gradient(*volume, input.tau_k.row(h).transpose());
      chained.segment<3>(h * 3) += g_feat[h * den.feature_dims()] * du;
    }
  }
  Trajectory out(horizon, 3);
  for (Eigen::Index h = 0; h < horizon; ++h) out.row(h) = chained.segment<3>(h * 3).transpose();
  return out;
}

}  // namespace

std::pair<Trajectory, Trajectory> forward_noise(const Trajectory& tau0, int k,
                                                const DiffusionSchedule& schedule, Rng& rng) {
  if (k < 1) throw Error(ErrorCode::BadStepIndex, "forward step must be >= 1");
  const double abar = schedule.alpha_bar_at(k);
  const Trajectory eps = standard_normal(tau0.rows(), rng);
  Trajectory tau_k = std::sqrt(abar) * tau0 + std::sqrt(1.0 - abar) * eps;
  return {std::move(tau_k), eps};
}

Trajectory posterior_step(const Trajectory& tau_k, const Trajectory& x0_pred, int k,
                          const DiffusionSchedule& schedule, Rng& rng) {
  if (tau_k.rows() != x0_pred.rows())
    throw Error(ErrorCode::HorizonMismatch, "prediction horizon differs from the chain state");
  const double abar = schedule.alpha_bar_at(k);
  const double abar_prev = schedule.alpha_bar_at(k - 1);
  const double beta = schedule.beta_at(k);
  const double alpha = schedule.alpha_at(k);

  // analytic limit: the final transition is the clean prediction, no noise
  if (k == 1) return x0_pred;

  const double coeff_x0 = std::sqrt(abar_prev) * beta / (1.0 - abar);
  const double coeff_tau = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar);
  const double sigma = std::sqrt(schedule.sigma2_at(k));
  return coeff_x0 * x0_pred + coeff_tau * tau_k +
         sigma * standard_normal(tau_k.rows(), rng);
}

Trajectory guide(const Trajectory& x0_pred, const Trajectory& cost_gradient, int k,
                 const DiffusionSchedule& schedule) {
  if (cost_gradient.rows() != x0_pred.rows())
    throw Error(ErrorCode::HorizonMismatch, "cost gradient shape differs from the trajectory");
  Trajectory guided = x0_pred - schedule.sigma2_at(k) * cost_gradient;
  guided.row(0) = x0_pred.row(0);  // the start waypoint is never guided
  return guided;
}

SampleBatch guided_sample(const denoiser::Denoiser& den, const Eigen::VectorXd& conditioning,
                          const costs::GuidanceConfig& config,
                          const DiffusionSchedule& schedule, int n_samples, std::uint64_t seed,
                          const SampleOptions& options) {
  config.validate();
  if (n_samples <= 0) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  const int horizon = den.horizon();
  if (horizon < 2) throw Error(ErrorCode::HorizonMismatch, "denoiser horizon must be >= 2");
  const bool guidance_active =
      config.lambda_goal > 0.0 || config.lambda_collide > 0.0 || config.lambda_normal > 0.0;
  if (options.mode == GuidanceMode::ThroughDenoiser && guidance_active &&
      !den.has_input_jacobian())
    throw Error(ErrorCode::InvalidArgument,
                "through-denoiser guidance needs a denoiser input jacobian");

  // step encodings are shared across chains
  std::vector<Eigen::VectorXd> step_encodings(schedule.steps + 1);
  for (int k = 1; k <= schedule.steps; ++k)
    step_encodings[k] = positional_encoding(static_cast<double>(k), options.pe_dims);

  SampleBatch batch;
  batch.trajectories.resize(n_samples);
  batch.costs.resize(n_samples);
  batch.seeds.resize(n_samples);

  parallel_for(
      n_samples,
      [&](int chain) {
        const std::uint64_t chain_seed = mix_seed(seed, static_cast<std::uint64_t>(chain));
        Rng rng(chain_seed);
        Trajectory tau = standard_normal(horizon, rng);

        denoiser::DenoiserInput input;
        input.conditioning = conditioning;
        for (int k = schedule.steps; k >= 1; --k) {
          input.tau_k = tau;
          input.features = waypoint_features(options.feature_volume, tau, den.feature_dims());
          input.step_encoding = step_encodings[k];
          input.k = k;

          Trajectory x0 = den.predict_x0(input);
          if (guidance_active) {
            for (int g = 0; g < options.guide_steps; ++g) {
              const costs::CostReport report = costs::cost_total(x0, config);
              const Trajectory gradient =
                  options.mode == GuidanceMode::DirectOnX0
                      ? report.gradient
                      : chain_through_denoiser(den, input, report.gradient,
                                               options.feature_volume);
              x0 = guide(x0, gradient, k, schedule);
            }
          }
          tau = posterior_step(tau, x0, k, schedule, rng);
        }

        batch.trajectories[chain] = tau;
        batch.costs[chain] = costs::cost_total(tau, config);
        batch.seeds[chain] = chain_seed;
      },
      options.threads);
  return batch;
}

std::vector<int> rank_by_cost(const SampleBatch& batch) {
  if (batch.trajectories.empty()) throw Error(ErrorCode::EmptyBatch, "no samples to rank");
  std::vector<int> order(batch.trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return batch.costs[a].total < batch.costs[b].total; });
  return order;
}

}  // namespace affordkit::diffusion
