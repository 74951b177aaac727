#pragma once

#include <Eigen/Core>

namespace affordkit::diffusion {

enum class ScheduleKind { Linear, Cosine };

/// Per-step noise coefficients, indexed 1..K through the accessors.
/// sigma2 is the posterior variance beta_k * (1 - abar_{k-1}) / (1 - abar_k),
/// which is zero at k = 1 by the abar_0 = 1 convention.
struct DiffusionSchedule {
  int steps = 0;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd alpha_bar;
  Eigen::VectorXd sigma2;

  double beta_at(int k) const { return beta[check(k)]; }
  double alpha_at(int k) const { return alpha[check(k)]; }
  /// alpha_bar_at(0) returns 1 (empty product).
  double alpha_bar_at(int k) const;
  double sigma2_at(int k) const { return sigma2[check(k)]; }

 private:
  int check(int k) const;
};

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end,
                                ScheduleKind kind = ScheduleKind::Linear);

}  // namespace affordkit::diffusion
