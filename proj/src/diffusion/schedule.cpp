#include "affordkit/diffusion/schedule.hpp"

#include <cmath>

#include "affordkit/core/error.hpp"

namespace affordkit::diffusion {

int DiffusionSchedule::check(int k) const {
  if (k < 1 || k > steps)
    throw Error(ErrorCode::BadStepIndex, "step " + std::to_string(k) + " outside 1.." +
                                             std::to_string(steps));
  return k - 1;
}

double DiffusionSchedule::alpha_bar_at(int k) const {
  if (k == 0) return 1.0;
  return alpha_bar[check(k)];
}

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end,
                                ScheduleKind kind) {
  if (steps < 1) throw Error(ErrorCode::BadScheduleParams, "need at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw Error(ErrorCode::BadScheduleParams, "need 0 < beta_start <= beta_end < 1");

  DiffusionSchedule s;
  s.steps = steps;
  s.beta.resize(steps);
  if (kind == ScheduleKind::Linear) {
    for (int k = 0; k < steps; ++k)
      s.beta[k] = steps == 1 ? beta_start
                             : beta_start + (beta_end - beta_start) * k / (steps - 1.0);
  } else {
    // squared-cosine noise level; betas derived from consecutive ratios and
    // clipped into the configured range
    const double offset = 0.008;
    const auto level = [&](double t) {
      const double x = (t / steps + offset) / (1.0 + offset) * M_PI / 2.0;
      return std::cos(x) * std::cos(x);
    };
    for (int k = 0; k < steps; ++k) {
      const double b = 1.0 - level(k + 1.0) / level(static_cast<double>(k));
      s.beta[k] = std::clamp(b, beta_start, beta_end);
    }
  }

  s.alpha = 1.0 - s.beta.array();
  s.alpha_bar.resize(steps);
  s.sigma2.resize(steps);
  double abar = 1.0;
  for (int k = 0; k < steps; ++k) {
    const double abar_prev = abar;
    abar *= s.alpha[k];
    s.alpha_bar[k] = abar;
    s.sigma2[k] = k == 0 ? 0.0 : s.beta[k] * (1.0 - abar_prev) / (1.0 - abar);
  }
  return s;
}

}  // namespace affordkit::diffusion
