#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "affordkit/core/encoding.hpp"
#include "affordkit/denoiser/gmm.hpp"
#include "affordkit/denoiser/mlp.hpp"
#include "affordkit/diffusion/sampler.hpp"

using namespace affordkit;

namespace {

Trajectory constant_trajectory(int horizon, const Vec3& value) {
  Trajectory t(horizon, 3);
  for (int h = 0; h < horizon; ++h) t.row(h) = value.transpose();
  return t;
}

// dense trapezoid quadrature of E[tau0 | tau_k] for an H=1 mixture
Vec3 quadrature_posterior_mean(const denoiser::GmmPrior& prior, const Vec3& tau_k, double abar) {
  const double lo = -6.0, hi = 6.0;
  const int n = 64;
  const double step = (hi - lo) / n;
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (int ix = 0; ix <= n; ++ix)
    for (int iy = 0; iy <= n; ++iy)
      for (int iz = 0; iz <= n; ++iz) {
        const Vec3 x0(lo + ix * step, lo + iy * step, lo + iz * step);
        double prior_pdf = 0.0;
        for (Eigen::Index j = 0; j < prior.weights.size(); ++j) {
          const Vec3 m = prior.means[j].row(0).transpose();
          const double var = prior.variances[j];
          prior_pdf += prior.weights[j] * std::exp(-(x0 - m).squaredNorm() / (2.0 * var)) /
                       std::pow(2.0 * M_PI * var, 1.5);
        }
        const double like =
            std::exp(-(tau_k - std::sqrt(abar) * x0).squaredNorm() / (2.0 * (1.0 - abar)));
        double w = prior_pdf * like;
        int edges = (ix == 0 || ix == n) + (iy == 0 || iy == n) + (iz == 0 || iz == n);
        w *= std::pow(0.5, edges);  // trapezoid edge weights
        num += w * x0;
        den += w;
      }
  return num / den;
}

}  // namespace

TEST_CASE("analytic denoiser limits") {
  const auto schedule = diffusion::make_schedule(100, 1e-9, 1e-8);
  const Trajectory tau = constant_trajectory(3, Vec3(0.4, -0.2, 0.7));

  SUBCASE("no-noise limit returns the observation") {
    denoiser::GmmPrior prior;
    prior.weights = Eigen::VectorXd::Ones(1);
    prior.means = {constant_trajectory(3, Vec3(5, 5, 5))};
    prior.variances = Eigen::VectorXd::Constant(1, 1.0);
    // abar ~ 1 so the posterior concentrates on tau itself
    const Trajectory x0 = denoiser::analytic_denoise(prior, tau, 1, schedule);
    CHECK((x0 - tau).norm() < 1e-4);
  }
  SUBCASE("point prior returns the mean") {
    const auto noisy = diffusion::make_schedule(100, 1e-4, 0.05);
    denoiser::GmmPrior prior;
    prior.weights = Eigen::VectorXd::Ones(1);
    prior.means = {constant_trajectory(3, Vec3(1, 2, 3))};
    prior.variances = Eigen::VectorXd::Constant(1, 1e-12);
    const Trajectory x0 = denoiser::analytic_denoise(prior, tau, 100, noisy);
    CHECK((x0 - prior.means[0]).norm() < 1e-6);
  }
}

TEST_CASE("analytic denoiser matches dense quadrature for a two-component mixture") {
  const auto schedule = diffusion::make_schedule(50, 1e-3, 0.08);
  denoiser::GmmPrior prior;
  prior.weights = Eigen::VectorXd(2);
  prior.weights << 0.3, 0.7;
  prior.means = {constant_trajectory(1, Vec3(-1.0, 0.4, 0.2)),
                 constant_trajectory(1, Vec3(0.8, -0.5, 1.1))};
  prior.variances = Eigen::VectorXd(2);
  prior.variances << 0.35, 0.6;

  for (const int k : {10, 30, 50}) {
    const double abar = schedule.alpha_bar_at(k);
    const Trajectory tau = constant_trajectory(1, Vec3(0.25, -0.15, 0.55));
    const Trajectory x0 = denoiser::analytic_denoise(prior, tau, k, schedule);
    const Vec3 want = quadrature_posterior_mean(prior, tau.row(0).transpose(), abar);
    CHECK((x0.row(0).transpose() - want).norm() < 1e-6);
  }
}

TEST_CASE("analytic denoiser is permutation equivariant in components") {
  const auto schedule = diffusion::make_schedule(40, 1e-3, 0.05);
  denoiser::GmmPrior prior;
  prior.weights = Eigen::VectorXd(2);
  prior.weights << 0.4, 0.6;
  prior.means = {constant_trajectory(2, Vec3(1, 0, 0)), constant_trajectory(2, Vec3(0, 1, 0))};
  prior.variances = Eigen::VectorXd(2);
  prior.variances << 0.2, 0.5;

  denoiser::GmmPrior swapped;
  swapped.weights = Eigen::VectorXd(2);
  swapped.weights << 0.6, 0.4;
  swapped.means = {prior.means[1], prior.means[0]};
  swapped.variances = Eigen::VectorXd(2);
  swapped.variances << 0.5, 0.2;

  const Trajectory tau = constant_trajectory(2, Vec3(0.3, 0.4, -0.2));
  CHECK((denoiser::analytic_denoise(prior, tau, 20, schedule) -
         denoiser::analytic_denoise(swapped, tau, 20, schedule))
            .norm() < 1e-12);
}

TEST_CASE("analytic denoiser input jacobian matches finite differences") {
  const auto schedule = diffusion::make_schedule(40, 1e-3, 0.05);
  denoiser::GmmPrior prior;
  prior.weights = Eigen::VectorXd(2);
  prior.weights << 0.45, 0.55;
  prior.means = {constant_trajectory(2, Vec3(-0.4, 0.2, 0.1)),
                 constant_trajectory(2, Vec3(0.5, -0.3, 0.7))};
  prior.variances = Eigen::VectorXd(2);
  prior.variances << 0.3, 0.45;
  const denoiser::AnalyticGmmDenoiser den(prior, schedule);

  denoiser::DenoiserInput input;
  input.tau_k = constant_trajectory(2, Vec3(0.2, 0.1, 0.3));
  input.tau_k(1, 1) = -0.6;
  input.features.resize(2, 0);
  input.step_encoding = positional_encoding(25.0);
  input.conditioning = Eigen::VectorXd();
  input.k = 25;

  Eigen::MatrixXd d_tau;
  den.input_jacobian(input, &d_tau, nullptr);

  const double eps = 1e-6;
  for (int idx = 0; idx < 6; ++idx) {
    auto plus = input, minus = input;
    plus.tau_k(idx / 3, idx % 3) += eps;
    minus.tau_k(idx / 3, idx % 3) -= eps;
    const Trajectory fp = den.predict_x0(plus);
    const Trajectory fm = den.predict_x0(minus);
    for (int out = 0; out < 6; ++out) {
      const double fd = ((fp - fm)(out / 3, out % 3)) / (2.0 * eps);
      CHECK(d_tau(out, idx) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("mixture validation rejects malformed priors") {
  denoiser::GmmPrior prior;
  prior.weights = Eigen::VectorXd(2);
  prior.weights << 0.5, 0.6;  // does not sum to 1
  prior.means = {constant_trajectory(1, Vec3::Zero()), constant_trajectory(1, Vec3::Ones())};
  prior.variances = Eigen::VectorXd::Constant(2, 0.1);
  CHECK_THROWS_AS(prior.validate(), Error);
}

TEST_CASE("mlp forward basics") {
  denoiser::MlpConfig cfg;
  cfg.horizon = 2;
  cfg.feature_dims = 1;
  cfg.pe_dims = 8;
  cfg.cond_dims = 4;
  cfg.hidden = {8, 8};

  SUBCASE("zero weights give zero output") {
    denoiser::MlpDenoiser den(cfg);
    const Eigen::VectorXd out = den.forward(Eigen::VectorXd::Ones(cfg.input_dims()));
    CHECK(out.norm() == 0.0);
  }
  SUBCASE("seeded initialization is reproducible") {
    denoiser::MlpDenoiser a(cfg), b(cfg);
    a.initialize(321);
    b.initialize(321);
    const Eigen::VectorXd input = Eigen::VectorXd::LinSpaced(cfg.input_dims(), -1.0, 1.0);
    CHECK(a.forward(input) == b.forward(input));
  }
  SUBCASE("input shape is validated") {
    denoiser::MlpDenoiser den(cfg);
    denoiser::DenoiserInput input;
    input.tau_k = Trajectory::Zero(3, 3);  // wrong horizon
    input.features = Eigen::MatrixXd::Zero(3, 1);
    input.step_encoding = Eigen::VectorXd::Zero(8);
    input.conditioning = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS((void)den.predict_x0(input), Error);
  }
}

TEST_CASE("mlp training fits a single constant trajectory") {
  denoiser::MlpConfig cfg;
  cfg.horizon = 4;
  cfg.feature_dims = 1;
  cfg.pe_dims = 16;
  cfg.cond_dims = 2 * 3 * 16;
  cfg.hidden = {32, 32};
  denoiser::MlpDenoiser den(cfg);
  den.initialize(5);

  const auto schedule = diffusion::make_schedule(50, 1e-4, 0.05);
  denoiser::TrainingSample item;
  item.sample.trajectory = constant_trajectory(4, Vec3(0.2, -0.1, 0.4));
  item.conditioning = denoiser::make_conditioning(Vec3(0.2, -0.1, 0.4), Vec3(0.2, -0.1, 0.4),
                                                  Eigen::VectorXd(), 16);

  const auto report = denoiser::mlp_train(den, {item}, schedule, 1000, 1e-2, 7);
  REQUIRE(report.loss_curve.size() == 1000);
  const auto median_of = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> window(report.loss_curve.begin() + lo, report.loss_curve.begin() + hi);
    std::sort(window.begin(), window.end());
    return window[window.size() / 2];
  };
  const double early = median_of(0, 20);
  const double late = median_of(900, 1000);
  CHECK(late < 0.01 * early);
}

TEST_CASE("training edge cases") {
  denoiser::MlpConfig cfg;
  cfg.horizon = 2;
  cfg.pe_dims = 8;
  cfg.cond_dims = 2 * 3 * 8;
  cfg.hidden = {8};
  const auto schedule = diffusion::make_schedule(10, 1e-3, 0.05);

  SUBCASE("empty dataset") {
    denoiser::MlpDenoiser den(cfg);
    CHECK_THROWS_AS((void)denoiser::mlp_train(den, {}, schedule, 1, 1e-3, 1), Error);
  }
  SUBCASE("zero learning rate leaves parameters untouched") {
    denoiser::MlpDenoiser den(cfg);
    den.initialize(11);
    const auto weights_before = den.weights();
    denoiser::TrainingSample item;
    item.sample.trajectory = constant_trajectory(2, Vec3(1, 0, 0));
    item.conditioning =
        denoiser::make_conditioning(Vec3(1, 0, 0), Vec3(1, 0, 0), Eigen::VectorXd(), 8);
    const auto report = denoiser::mlp_train(den, {item}, schedule, 5, 0.0, 3);
    for (std::size_t l = 0; l < weights_before.size(); ++l)
      CHECK(den.weights()[l] == weights_before[l]);
    for (const double loss : report.loss_curve) CHECK(std::isfinite(loss));
  }
  SUBCASE("exploding learning rate raises DivergedTraining") {
    denoiser::MlpDenoiser den(cfg);
    den.initialize(11);
    denoiser::TrainingSample item;
    item.sample.trajectory = constant_trajectory(2, Vec3(1, 0, 0));
    item.conditioning =
        denoiser::make_conditioning(Vec3(1, 0, 0), Vec3(1, 0, 0), Eigen::VectorXd(), 8);
    try {
      (void)denoiser::mlp_train(den, {item}, schedule, 200, 1e14, 3);
      // reaching here means the run stayed finite, which the tiny net may;
      // push harder before declaring failure
      (void)denoiser::mlp_train(den, {item}, schedule, 2000, 1e16, 3);
      FAIL("expected DivergedTraining");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DivergedTraining);
    }
  }
}

TEST_CASE("model save/load round-trip") {
  namespace fs = std::filesystem;
  denoiser::MlpConfig cfg;
  cfg.horizon = 3;
  cfg.pe_dims = 8;
  cfg.cond_dims = 2 * 3 * 8;
  cfg.hidden = {16, 8};
  denoiser::MlpDenoiser den(cfg);
  den.initialize(99);

  const fs::path path = fs::temp_directory_path() / "affordkit_test_model.bin";
  denoiser::save_mlp(den, path);
  const auto back = denoiser::load_mlp(path);
  CHECK(back.config().horizon == cfg.horizon);
  CHECK(back.config().hidden == cfg.hidden);

  const Eigen::VectorXd input = Eigen::VectorXd::LinSpaced(cfg.input_dims(), -0.8, 0.8);
  const Eigen::VectorXd a = den.forward(input);
  const Eigen::VectorXd b = back.forward(input);
  CHECK((a - b).norm() < 1e-5);  // parameters pass through float32
  fs::remove(path);
}

TEST_CASE("conditioning layout") {
  const Eigen::VectorXd base = denoiser::make_conditioning(Vec3(1, 2, 3), Vec3(4, 5, 6));
  CHECK(base.size() == 2 * 3 * 32);
  Eigen::VectorXd ctx(5);
  ctx << 1, 2, 3, 4, 5;
  const Eigen::VectorXd with_ctx = denoiser::make_conditioning(Vec3(1, 2, 3), Vec3(4, 5, 6), ctx);
  CHECK(with_ctx.size() == base.size() + 5);
  CHECK(with_ctx.tail(5) == ctx);
}
