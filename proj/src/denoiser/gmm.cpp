#include "affordkit/denoiser/gmm.hpp"

#include <cmath>
#include <limits>

#include "affordkit/core/error.hpp"

namespace affordkit::denoiser {

void GmmPrior::validate() const {
  if (weights.size() == 0 || means.empty() ||
      weights.size() != static_cast<Eigen::Index>(means.size()) ||
      weights.size() != variances.size())
    throw Error(ErrorCode::InvalidArgument, "mixture fields must have matching sizes");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  if ((weights.array() < 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "mixture weights must be non-negative");
  if ((variances.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "mixture variances must be positive");
  const Eigen::Index horizon = means.front().rows();
  for (const auto& m : means)
    if (m.rows() != horizon)
      throw Error(ErrorCode::InvalidArgument, "mixture means must share the horizon");
}

namespace {

struct Responsibilities {
  Eigen::VectorXd r;          // posterior component weights
  Eigen::VectorXd shrink;     // sqrt(abar) * var_j / marginal_var_j
  Eigen::VectorXd pull;       // (1 - abar) / marginal_var_j
  Eigen::VectorXd inv_mvar;   // 1 / marginal_var_j
};

Responsibilities responsibilities(const GmmPrior& prior, const Trajectory& tau_k, double abar) {
  const Eigen::Index n = prior.weights.size();
  const double dim = static_cast<double>(tau_k.size());
  Eigen::VectorXd logits(n);
  Responsibilities out;
  out.shrink.resize(n);
  out.pull.resize(n);
  out.inv_mvar.resize(n);

  for (Eigen::Index j = 0; j < n; ++j) {
    const double marginal_var = abar * prior.variances[j] + (1.0 - abar);
    const double sq = (tau_k - std::sqrt(abar) * prior.means[j]).squaredNorm();
    logits[j] = (prior.weights[j] > 0.0 ? std::log(prior.weights[j])
                                        : -std::numeric_limits<double>::infinity()) -
                0.5 * dim * std::log(marginal_var) - 0.5 * sq / marginal_var;
    out.shrink[j] = std::sqrt(abar) * prior.variances[j] / marginal_var;
    out.pull[j] = (1.0 - abar) / marginal_var;
    out.inv_mvar[j] = 1.0 / marginal_var;
  }

  const double peak = logits.maxCoeff();
  if (!std::isfinite(peak))
    throw Error(ErrorCode::NumericalUnderflow, "all mixture responsibilities vanished");
  const Eigen::VectorXd shifted = (logits.array() - peak).exp();
  out.r = shifted / shifted.sum();
  return out;
}

}  // namespace

Trajectory analytic_denoise(const GmmPrior& prior, const Trajectory& tau_k, int k,
                            const diffusion::DiffusionSchedule& schedule) {
  prior.validate();
  const double abar = schedule.alpha_bar_at(k);
  const auto resp = responsibilities(prior, tau_k, abar);

  Trajectory x0 = Trajectory::Zero(tau_k.rows(), 3);
  for (Eigen::Index j = 0; j < prior.weights.size(); ++j)
    x0 += resp.r[j] * (resp.shrink[j] * tau_k + resp.pull[j] * prior.means[j]);
  return x0;
}

AnalyticGmmDenoiser::AnalyticGmmDenoiser(GmmPrior prior,
                                         const diffusion::DiffusionSchedule& schedule)
    : prior_(std::move(prior)), schedule_(schedule) {
  prior_.validate();
}

Trajectory AnalyticGmmDenoiser::predict_x0(const DenoiserInput& input) const {
  return analytic_denoise(prior_, input.tau_k, input.k, schedule_);
}

void AnalyticGmmDenoiser::input_jacobian(const DenoiserInput& input, Eigen::MatrixXd* d_tau,
                                         Eigen::MatrixXd* d_features) const {
  const double abar = schedule_.alpha_bar_at(input.k);
  const auto resp = responsibilities(prior_, input.tau_k, abar);
  const Eigen::Index dim = input.tau_k.size();

  if (d_features) d_features->resize(dim, 0);
  if (!d_tau) return;

  // flatten waypoint-major
  const auto flatten = [dim](const Trajectory& t) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index h = 0; h < t.rows(); ++h) v.segment<3>(h * 3) = t.row(h).transpose();
    return v;
  };
  const Eigen::VectorXd tau = flatten(input.tau_k);

  // x0 = sum_j r_j(tau) mu_j(tau); mu_j is affine in tau, and
  // d r_j / d tau = r_j (s_j - sum_l r_l s_l) with s_j = dlog N_j / d tau.
  const Eigen::Index n = prior_.weights.size();
  std::vector<Eigen::VectorXd> mu(n), score(n);
  Eigen::VectorXd mean_score = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    mu[j] = resp.shrink[j] * tau + resp.pull[j] * flatten(prior_.means[j]);
    score[j] = -resp.inv_mvar[j] * (tau - std::sqrt(abar) * flatten(prior_.means[j]));
    mean_score += resp.r[j] * score[j];
  }

  *d_tau = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    d_tau->diagonal().array() += resp.r[j] * resp.shrink[j];
    *d_tau += mu[j] * (resp.r[j] * (score[j] - mean_score)).transpose();
  }
}

}  // namespace affordkit::denoiser
