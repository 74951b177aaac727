#include "affordkit/cli/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "affordkit/core/encoding.hpp"
#include "affordkit/core/error.hpp"
#include "affordkit/core/rng.hpp"
#include "affordkit/costs/guidance.hpp"
#include "affordkit/denoiser/mlp.hpp"
#include "affordkit/ingest/synth.hpp"
#include "affordkit/metric/refine.hpp"
#include "affordkit/tsdf/volume.hpp"

namespace affordkit::cli {

namespace {

double rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  const double scale = std::max({analytic.norm(), fd.norm(), 1e-12});
  return (analytic - fd).norm() / scale;
}

Eigen::VectorXd flatten(const Trajectory& t) {
  Eigen::VectorXd v(t.size());
  for (Eigen::Index h = 0; h < t.rows(); ++h) v.segment<3>(h * 3) = t.row(h).transpose();
  return v;
}

/// Smooth volume with penetration pockets, bounded away from zero except on
/// thin level sets: U = 0.8 sin(ax) sin(by) sin(cz).
tsdf::TsdfVolume wavy_volume() {
  tsdf::TsdfVolume vol = tsdf::make_volume(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5), 0.025, 0.1);
  for (int iz = 0; iz < vol.dims.z(); ++iz)
    for (int iy = 0; iy < vol.dims.y(); ++iy)
      for (int ix = 0; ix < vol.dims.x(); ++ix) {
        const Vec3 p = vol.voxel_center(ix, iy, iz);
        vol.values[vol.index(ix, iy, iz)] =
            0.8 * std::sin(7.0 * p.x()) * std::sin(9.0 * p.y() + 0.4) * std::sin(8.0 * p.z() + 1.1);
        vol.weights[vol.index(ix, iy, iz)] = 1.0;
      }
  return vol;
}

bool near_cell_face(const tsdf::TsdfVolume& vol, const Vec3& p, double margin) {
  const Vec3 g = (p - vol.origin) / vol.voxel_size;
  for (int axis = 0; axis < 3; ++axis) {
    if (g[axis] < margin || g[axis] > vol.dims[axis] - 1 - margin) return true;
    const double frac = g[axis] - std::floor(g[axis]);
    if (frac < margin || frac > 1.0 - margin) return true;
  }
  return false;
}

Trajectory random_trajectory(Rng& rng, int horizon, double span) {
  Trajectory t(horizon, 3);
  for (int h = 0; h < horizon; ++h)
    for (int c = 0; c < 3; ++c) t(h, c) = rng.uniform(-span, span);
  return t;
}

double check_trilinear(Rng& rng, double corrupt, int points) {
  const auto vol = wavy_volume();
  const double eps = vol.voxel_size / 100.0;
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    Vec3 p;
    do {
      for (int c = 0; c < 3; ++c) p[c] = rng.uniform(-0.45, 0.45);
    } while (near_cell_face(vol, p, 0.05));
    const Vec3 analytic = corrupt * tsdf::query_gradient(vol, p);
    Vec3 fd;
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 hi = p, lo = p;
      hi[axis] += eps;
      lo[axis] -= eps;
      fd[axis] = (tsdf::query(vol, hi) - tsdf::query(vol, lo)) / (2.0 * eps);
    }
    worst = std::max(worst, rel_error(analytic, fd));
  }
  return worst;
}

double fd_gradient_check(const Trajectory& traj,
                         const std::function<double(const Trajectory&)>& value,
                         const Eigen::VectorXd& analytic, double eps) {
  Eigen::VectorXd fd(traj.size());
  Trajectory work = traj;
  for (Eigen::Index h = 0; h < traj.rows(); ++h)
    for (int c = 0; c < 3; ++c) {
      const double saved = work(h, c);
      work(h, c) = saved + eps;
      const double plus = value(work);
      work(h, c) = saved - eps;
      const double minus = value(work);
      work(h, c) = saved;
      fd[h * 3 + c] = (plus - minus) / (2.0 * eps);
    }
  return rel_error(analytic, fd);
}

double check_goal(Rng& rng, double corrupt, int points) {
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    const int horizon = 4 + (n % 5);
    const Trajectory traj = random_trajectory(rng, horizon, 0.6);
    Points3 goals(3, 3);
    for (int g = 0; g < 3; ++g)
      for (int c = 0; c < 3; ++c) goals(g, c) = rng.uniform(-0.6, 0.6);
    auto [value, grad] = costs::cost_goal(traj, goals);
    const double err = fd_gradient_check(
        traj, [&](const Trajectory& t) { return costs::cost_goal(t, goals).first; },
        corrupt * flatten(grad), 1e-6);
    worst = std::max(worst, err);
  }
  return worst;
}

double check_collide(Rng& rng, double corrupt, int points) {
  const auto vol = wavy_volume();
  const Points3 agent = costs::gripper_points(costs::AgentPrimitive::Sphere, 8, 0.03, Vec3::Zero());
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    Trajectory traj;
    bool clean = false;
    while (!clean) {
      traj = random_trajectory(rng, 5, 0.35);
      clean = true;
      const Vec3 start = traj.row(0).transpose();
      for (Eigen::Index h = 1; h < traj.rows() && clean; ++h)
        for (Eigen::Index i = 0; i < agent.rows() && clean; ++i) {
          const Vec3 p = agent.row(i).transpose() + traj.row(h).transpose() - start;
          // stay away from the hinge at U = 0 and from cell faces
          if (near_cell_face(vol, p, 0.02)) clean = false;
          if (std::abs(tsdf::query(vol, p)) < 1e-3) clean = false;
        }
    }
    auto [value, grad] = costs::cost_collide(traj, agent, vol);
    // waypoint 0 is clamped in the analytic gradient; skip it in the check
    const auto fd_value = [&](const Trajectory& t) {
      return costs::cost_collide(t, agent, vol).first;
    };
    Eigen::VectorXd analytic = corrupt * flatten(grad);
    Eigen::VectorXd fd(traj.size());
    Trajectory work = traj;
    for (Eigen::Index h = 1; h < traj.rows(); ++h)
      for (int c = 0; c < 3; ++c) {
        const double saved = work(h, c);
        const double eps = 1e-6;
        work(h, c) = saved + eps;
        const double plus = fd_value(work);
        work(h, c) = saved - eps;
        const double minus = fd_value(work);
        work(h, c) = saved;
        fd[h * 3 + c] = (plus - minus) / (2.0 * eps);
      }
    fd.segment<3>(0).setZero();
    worst = std::max(worst, rel_error(analytic, fd));
  }
  return worst;
}

double check_normal(Rng& rng, double corrupt, int points) {
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    Vec3 normal;
    do {
      normal = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (normal.norm() < 1e-3);
    normal.normalize();

    Trajectory traj;
    bool clean = false;
    while (!clean) {
      traj = random_trajectory(rng, 6, 0.5);
      clean = true;
      const Vec3 start = traj.row(0).transpose();
      for (Eigen::Index h = 1; h < traj.rows() && clean; ++h) {
        const Vec3 delta = traj.row(h).transpose() - start;
        if (delta.norm() < 1e-2) clean = false;
        else if (std::abs(delta.normalized().dot(normal)) < 1e-2) clean = false;  // sign hinge
      }
    }
    auto [value, grad] = costs::cost_normal(traj, normal);
    Eigen::VectorXd analytic = corrupt * flatten(grad);
    Eigen::VectorXd fd = Eigen::VectorXd::Zero(traj.size());
    Trajectory work = traj;
    for (Eigen::Index h = 1; h < traj.rows(); ++h)
      for (int c = 0; c < 3; ++c) {
        const double saved = work(h, c);
        const double eps = 1e-6;
        work(h, c) = saved + eps;
        const double plus = costs::cost_normal(work, normal).first;
        work(h, c) = saved - eps;
        const double minus = costs::cost_normal(work, normal).first;
        work(h, c) = saved;
        fd[h * 3 + c] = (plus - minus) / (2.0 * eps);
      }
    worst = std::max(worst, rel_error(analytic, fd));
  }
  return worst;
}

double check_eq2(Rng& rng, double corrupt, int points) {
  ingest::SynthConfig cfg;
  cfg.frames = 4;
  cfg.landmarks = 40;
  cfg.width = 96;
  cfg.height = 72;
  cfg.focal = 90.0;
  cfg.geometry = ingest::SynthGeometry::Bowl;
  cfg.hand = false;
  auto [scene, gt] = ingest::synth_scene(cfg, 99);

  metric::RefineOptions options;
  options.stride = 8;
  const int k = metric::select_reference_frame(scene);

  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    // random state near the truth so the energy landscape is generic
    std::vector<geom::Posed> poses;
    std::vector<double> scales;
    for (const auto& frame : scene.frames) {
      geom::Twistd xi;
      for (int c = 0; c < 6; ++c) xi[c] = rng.uniform(-0.01, 0.01);
      poses.push_back(geom::se3_exp(xi) * frame.pose_init);
      scales.push_back(gt.s_g * std::exp(rng.uniform(-0.02, 0.02)));
    }
    scales[k] = gt.s_g;

    const auto corr = metric::build_correspondences(scene, poses, scales, k, options);
    if (corr.terms.empty()) continue;
    const Eigen::VectorXd analytic =
        corrupt * metric::frozen_energy_gradient(scene, corr, poses, scales, options);

    Eigen::VectorXd fd(analytic.size());
    const double eps = 1e-6;
    int block = 0;
    for (int i = 0; i < scene.frame_count(); ++i) {
      if (i == k) continue;
      for (int c = 0; c < 7; ++c) {
        const auto evaluate = [&](double sign) {
          auto poses_p = poses;
          auto scales_p = scales;
          if (c < 6) {
            geom::Twistd xi = geom::Twistd::Zero();
            xi[c] = sign * eps;
            poses_p[i] = geom::se3_exp(xi) * poses_p[i];
          } else {
            scales_p[i] *= std::exp(sign * eps);
          }
          return metric::frozen_energy(scene, corr, poses_p, scales_p, options);
        };
        fd[block * 7 + c] = (evaluate(1.0) - evaluate(-1.0)) / (2.0 * eps);
      }
      ++block;
    }
    worst = std::max(worst, rel_error(analytic, fd));
  }
  return worst;
}

double check_mlp(Rng& rng, double corrupt, int points) {
  denoiser::MlpConfig cfg;
  cfg.horizon = 2;
  cfg.feature_dims = 1;
  cfg.pe_dims = 8;
  cfg.cond_dims = 6;
  cfg.hidden = {8, 8};
  denoiser::MlpDenoiser den(cfg);
  den.initialize(12345);

  double worst = 0.0;
  const double eps = 1e-6;
  for (int n = 0; n < points; ++n) {
    Eigen::VectorXd input(cfg.input_dims());
    for (Eigen::Index i = 0; i < input.size(); ++i) input[i] = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd target(cfg.output_dims());
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.uniform(-1.0, 1.0);

    // parameter gradients
    std::vector<Eigen::MatrixXd> grad_w;
    std::vector<Eigen::VectorXd> grad_b;
    den.loss_and_gradients(input, target, &grad_w, &grad_b);

    std::vector<double> analytic_flat, fd_flat;
    for (std::size_t l = 0; l < den.weights().size(); ++l) {
      auto& w = den.weights()[l];
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          const double saved = w(r, c);
          w(r, c) = saved + eps;
          const double plus = den.loss_and_gradients(input, target, nullptr, nullptr);
          w(r, c) = saved - eps;
          const double minus = den.loss_and_gradients(input, target, nullptr, nullptr);
          w(r, c) = saved;
          fd_flat.push_back((plus - minus) / (2.0 * eps));
          analytic_flat.push_back(corrupt * grad_w[l](r, c));
        }
      auto& b = den.biases()[l];
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double saved = b[i];
        b[i] = saved + eps;
        const double plus = den.loss_and_gradients(input, target, nullptr, nullptr);
        b[i] = saved - eps;
        const double minus = den.loss_and_gradients(input, target, nullptr, nullptr);
        b[i] = saved;
        fd_flat.push_back((plus - minus) / (2.0 * eps));
        analytic_flat.push_back(corrupt * grad_b[l][i]);
      }
    }
    const Eigen::Map<Eigen::VectorXd> fa(analytic_flat.data(), analytic_flat.size());
    const Eigen::Map<Eigen::VectorXd> ff(fd_flat.data(), fd_flat.size());
    worst = std::max(worst, rel_error(fa, ff));

    // input jacobian against perturbed forward passes
    denoiser::DenoiserInput din;
    din.tau_k = Trajectory::Zero(cfg.horizon, 3);
    for (int h = 0; h < cfg.horizon; ++h)
      din.tau_k.row(h) = input.segment<3>(h * 3).transpose();
    din.features = Eigen::MatrixXd::Zero(cfg.horizon, cfg.feature_dims);
    for (int h = 0; h < cfg.horizon; ++h)
      din.features(h, 0) = input[cfg.horizon * 3 + h];
    din.step_encoding = input.segment(cfg.horizon * 3 + cfg.horizon, cfg.pe_dims);
    din.conditioning = input.tail(cfg.cond_dims);
    din.k = 1;
    Eigen::MatrixXd d_tau, d_feat;
    den.input_jacobian(din, &d_tau, &d_feat);

    const int probe_cols = cfg.horizon * 3 + cfg.horizon * cfg.feature_dims;
    Eigen::MatrixXd fd_jac(cfg.output_dims(), probe_cols);
    Eigen::VectorXd work = input;
    for (int c = 0; c < probe_cols; ++c) {
      const double saved = work[c];
      work[c] = saved + eps;
      const Eigen::VectorXd plus = den.forward(work);
      work[c] = saved - eps;
      const Eigen::VectorXd minus = den.forward(work);
      work[c] = saved;
      fd_jac.col(c) = (plus - minus) / (2.0 * eps);
    }
    Eigen::MatrixXd analytic_jac(cfg.output_dims(), probe_cols);
    analytic_jac << d_tau, d_feat;
    analytic_jac *= corrupt;
    const Eigen::Map<Eigen::VectorXd> ja(analytic_jac.data(), analytic_jac.size());
    const Eigen::Map<Eigen::VectorXd> jf(fd_jac.data(), fd_jac.size());
    worst = std::max(worst, rel_error(ja, jf));
  }
  return worst;
}

}  // namespace

GradcheckReport run_gradcheck(const std::vector<std::string>& targets, std::uint64_t seed,
                              const GradcheckOptions& options) {
  if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "no gradcheck targets given");
  GradcheckReport report;
  report.threshold = options.threshold;
  for (const auto& name : targets) {
    const double corrupt = name == options.corrupt_target ? 1.01 : 1.0;
    Rng rng(mix_seed(seed, std::hash<std::string>{}(name)));
    GradcheckTarget result;
    result.name = name;
    result.evaluations = options.points_per_target;
    if (name == "trilinear") result.worst_rel_error = check_trilinear(rng, corrupt, options.points_per_target);
    else if (name == "goal") result.worst_rel_error = check_goal(rng, corrupt, options.points_per_target);
    else if (name == "collide") result.worst_rel_error = check_collide(rng, corrupt, options.points_per_target);
    else if (name == "normal") result.worst_rel_error = check_normal(rng, corrupt, options.points_per_target);
    else if (name == "eq2") result.worst_rel_error = check_eq2(rng, corrupt, options.points_per_target);
    else if (name == "mlp") result.worst_rel_error = check_mlp(rng, corrupt, options.points_per_target);
    else throw Error(ErrorCode::UnknownTarget, name);
    report.targets.push_back(result);
  }
  return report;
}

}  // namespace affordkit::cli
