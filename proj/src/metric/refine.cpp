#include "affordkit/metric/refine.hpp"

#include <cmath>

#include "affordkit/core/error.hpp"
#include "affordkit/geom/camera.hpp"

namespace affordkit::metric {

namespace {

// per-term cost and its derivative w.r.t. the residual vector
inline double term_cost(const Vec3& r, double huber_delta, Vec3* d_cost_d_r) {
  const double n2 = r.squaredNorm();
  if (huber_delta <= 0.0) {
    if (d_cost_d_r) *d_cost_d_r = 2.0 * r;
    return n2;
  }
  const double n = std::sqrt(n2);
  if (n <= huber_delta) {
    if (d_cost_d_r) *d_cost_d_r = 2.0 * r;
    return n2;
  }
  if (d_cost_d_r) *d_cost_d_r = (2.0 * huber_delta / n) * r;
  return 2.0 * huber_delta * n - huber_delta * huber_delta;
}

// Depth second differences at (r, c) relative to the depth itself. Pixels on
// creases or depth discontinuities violate the locally-linear surface model
// behind the bilinear lookup and would dominate the residuals.
inline bool smooth_depth_at(const ImageXd& depth, int r, int c, double rel_thresh) {
  if (r < 1 || c < 1 || r >= depth.rows() - 1 || c >= depth.cols() - 1) return false;
  const double center = depth(r, c);
  if (!std::isfinite(center) || center <= 0.0) return false;
  const double left = depth(r, c - 1), right = depth(r, c + 1);
  const double up = depth(r - 1, c), down = depth(r + 1, c);
  if (!std::isfinite(left) || !std::isfinite(right) || !std::isfinite(up) ||
      !std::isfinite(down))
    return false;
  const double curvature =
      std::abs(left + right - 2.0 * center) + std::abs(up + down - 2.0 * center);
  return curvature <= rel_thresh * center;
}

// Bilinear depth and its pixel derivatives; empty on invalid neighbors.
struct DepthSample {
  double depth;
  double du, dv;
};

std::optional<DepthSample> sample_depth(const ImageXd& depth, const geom::Intrinsicsd& K,
                                        const Vec2& pixel) {
  if (!K.interpolable(pixel.x(), pixel.y())) return std::nullopt;
  const int c0 = std::min(static_cast<int>(std::floor(pixel.x())), K.width - 2);
  const int r0 = std::min(static_cast<int>(std::floor(pixel.y())), K.height - 2);
  const double fu = pixel.x() - c0;
  const double fv = pixel.y() - r0;
  const double d00 = depth(r0, c0), d01 = depth(r0, c0 + 1);
  const double d10 = depth(r0 + 1, c0), d11 = depth(r0 + 1, c0 + 1);
  if (!std::isfinite(d00) || !std::isfinite(d01) || !std::isfinite(d10) || !std::isfinite(d11))
    return std::nullopt;
  DepthSample s;
  s.depth = (1 - fv) * ((1 - fu) * d00 + fu * d01) + fv * ((1 - fu) * d10 + fu * d11);
  s.du = (1 - fv) * (d01 - d00) + fv * (d11 - d10);
  s.dv = (1 - fu) * (d10 - d00) + fu * (d11 - d01);
  if (!(s.depth > 0.0)) return std::nullopt;
  return s;
}

// Shared evaluation: energy, gradient, and per-frame Gauss-Newton blocks of
// the live-target objective over one frozen participating set.
struct Evaluation {
  double energy = 0.0;
  Eigen::VectorXd gradient;                          // 7 per non-reference frame
  std::vector<Eigen::Matrix<double, 7, 7>> hessian;  // per frame, reference zeroed
  std::vector<Eigen::Matrix<double, 7, 1>> rhs;
};

Evaluation evaluate(const ingest::SceneBundle& scene, const CorrespondenceSet& corr,
                    const std::vector<geom::Posed>& poses, const std::vector<double>& scales,
                    const RefineOptions& options, bool want_derivatives) {
  const int k = corr.reference_index;
  const int frames = static_cast<int>(poses.size());
  const auto& frame_k = scene.frames[k];
  const auto& K = frame_k.intrinsics;

  Evaluation out;
  if (want_derivatives) {
    out.hessian.assign(frames, Eigen::Matrix<double, 7, 7>::Zero());
    out.rhs.assign(frames, Eigen::Matrix<double, 7, 1>::Zero());
  }
  if (corr.terms.empty()) {
    out.gradient = Eigen::VectorXd::Zero(0);
    return out;
  }

  const geom::Posed inv_k = poses[k].inverse();
  const Eigen::Matrix3d rot_k = poses[k].rotation_matrix();
  const double inv_sk = 1.0 / scales[k];

  int cached_frame = -1;
  geom::Posed rel, world_from_i;
  Eigen::Matrix3d rel_rot;
  double inv_si = 1.0;

  double total = 0.0;
  for (const auto& term : corr.terms) {
    if (term.frame != cached_frame) {
      cached_frame = term.frame;
      world_from_i = poses[term.frame];
      rel = inv_k * world_from_i;
      rel_rot = rel.rotation_matrix();
      inv_si = 1.0 / scales[term.frame];
    }
    const Vec3 a = term.point_i * inv_si;
    const Vec3 rotated = rel_rot * a;
    const Vec3 w = rotated + rel.translation();  // warped point, camera k, scale-unaware
    if (w.z() <= geom::kMinProjectionDepth) continue;

    Vec2 u(K.fx * w.x() / w.z() + K.cx, K.fy * w.y() / w.z() + K.cy);
    const bool clamped_u = u.x() < 0.0 || u.x() > K.width - 1;
    const bool clamped_v = u.y() < 0.0 || u.y() > K.height - 1;
    u.x() = std::clamp(u.x(), 0.0, static_cast<double>(K.width - 1));
    u.y() = std::clamp(u.y(), 0.0, static_cast<double>(K.height - 1));

    const auto d = sample_depth(frame_k.depth, K, u);
    if (!d) continue;
    const double bx = (u.x() - K.cx) / K.fx;
    const double by = (u.y() - K.cy) / K.fy;
    const Vec3 target(bx * d->depth * inv_sk, by * d->depth * inv_sk, d->depth * inv_sk);
    const Vec3 r = w - target;

    Vec3 d_cost;
    total += term_cost(r, options.huber_delta, want_derivatives ? &d_cost : nullptr);
    if (!want_derivatives) continue;

    // d target / d pixel, through back-projection and the bilinear lookup
    Eigen::Matrix<double, 3, 2> dtarget_du;
    dtarget_du << (d->depth / K.fx + bx * d->du) * inv_sk, bx * d->dv * inv_sk,
        by * d->du * inv_sk, (d->depth / K.fy + by * d->dv) * inv_sk, d->du * inv_sk,
        d->dv * inv_sk;
    // d pixel / d warped point; zero where the pixel is clamped at the border
    Eigen::Matrix<double, 2, 3> du_dw = Eigen::Matrix<double, 2, 3>::Zero();
    if (!clamped_u) du_dw.row(0) << K.fx / w.z(), 0.0, -K.fx * w.x() / (w.z() * w.z());
    if (!clamped_v) du_dw.row(1) << 0.0, K.fy / w.z(), -K.fy * w.y() / (w.z() * w.z());

    const Eigen::Matrix3d chain = Eigen::Matrix3d::Identity() - dtarget_du * du_dw;

    const Vec3 y = world_from_i * a;  // warped point in world coordinates
    Eigen::Matrix<double, 3, 7> jac;
    jac.block<3, 3>(0, 0) = chain * (-rot_k.transpose() * geom::skew(y));
    jac.block<3, 3>(0, 3) = chain * rot_k.transpose();
    jac.col(6) = chain * (-rotated);

    // half-gradient of the per-term cost: jac^T (d cost / d r) / 2 keeps the
    // Gauss-Newton weighting consistent with the Huber branch
    out.rhs[term.frame] += 0.5 * jac.transpose() * d_cost;
    const double weight =
        options.huber_delta > 0.0 && r.norm() > options.huber_delta
            ? options.huber_delta / r.norm()
            : 1.0;
    out.hessian[term.frame] += weight * jac.transpose() * jac;
  }

  const double norm = 1.0 / static_cast<double>(corr.terms.size());
  out.energy = total * norm;
  if (want_derivatives) {
    std::vector<int> block(frames, -1);
    int next = 0;
    for (int i = 0; i < frames; ++i)
      if (i != k) block[i] = 7 * next++;
    out.gradient = Eigen::VectorXd::Zero(7 * next);
    for (int i = 0; i < frames; ++i) {
      if (i == k) continue;
      out.gradient.segment<7>(block[i]) = 2.0 * norm * out.rhs[i];
      out.hessian[i] *= 2.0 * norm;
      out.rhs[i] *= 2.0 * norm;
    }
  }
  return out;
}

void apply_step(std::vector<geom::Posed>& poses, std::vector<double>& scales, int k,
                const Eigen::VectorXd& delta, double alpha) {
  int next = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    const int b = 7 * next++;
    geom::Twistd xi = alpha * delta.segment<6>(b);
    poses[i] = geom::se3_exp(xi) * poses[i];
    scales[i] *= std::exp(alpha * delta[b + 6]);
  }
}

}  // namespace

std::optional<Vec2> projective_correspondence(const ingest::SceneBundle& scene, int i, int k,
                                              const Vec2& pixel,
                                              const std::vector<double>& scales,
                                              const std::vector<geom::Posed>& poses) {
  const auto& frame_i = scene.frames[i];
  const auto& frame_k = scene.frames[k];
  const auto d_i = ingest::depth_at(frame_i.depth, frame_i.intrinsics, pixel);
  if (!d_i) return std::nullopt;

  const Vec3 x_i = geom::backproject<double>(pixel, *d_i, frame_i.intrinsics);
  const geom::Posed rel = poses[k].inverse() * poses[i];
  const Vec3 warped = scales[k] * (rel * (x_i / scales[i]));
  if (warped.z() <= geom::kMinProjectionDepth) return std::nullopt;

  const Vec2 u_k = geom::project<double>(warped, frame_k.intrinsics);
  if (!frame_k.intrinsics.interpolable(u_k.x(), u_k.y())) return std::nullopt;
  if (!ingest::depth_at(frame_k.depth, frame_k.intrinsics, u_k)) return std::nullopt;
  return u_k;
}

CorrespondenceSet build_correspondences(const ingest::SceneBundle& scene,
                                        const std::vector<geom::Posed>& poses,
                                        const std::vector<double>& scales, int k,
                                        const RefineOptions& options) {
  CorrespondenceSet out;
  out.reference_index = k;
  const auto& frame_k = scene.frames[k];
  const auto& mask_k = scene.static_masks[k];

  for (int i = 0; i < scene.frame_count(); ++i) {
    if (i == k) continue;
    const auto& frame_i = scene.frames[i];
    const auto& K = frame_i.intrinsics;
    const geom::Posed rel = poses[k].inverse() * poses[i];

    for (int r = 0; r < K.height; r += options.stride) {
      for (int c = 0; c < K.width; c += options.stride) {
        if (!scene.static_masks[i](r, c)) continue;
        const double d_i = frame_i.depth(r, c);
        if (!std::isfinite(d_i) || d_i <= 0.0) continue;
        if (!smooth_depth_at(frame_i.depth, r, c, options.crease_rel)) continue;

        const Vec2 u_i(static_cast<double>(c), static_cast<double>(r));
        const Vec3 x_i = geom::backproject<double>(u_i, d_i, K);
        const Vec3 warped = rel * (x_i / scales[i]);
        if (warped.z() <= geom::kMinProjectionDepth) continue;
        const Vec3 warped_metric = scales[k] * warped;

        Vec2 u_k;
        try {
          u_k = geom::project<double>(warped_metric, frame_k.intrinsics);
        } catch (const Error&) {
          continue;
        }
        if (!frame_k.intrinsics.interpolable(u_k.x(), u_k.y())) continue;
        // all four bilinear neighbors must be static, or masked depth bleeds
        // into the interpolated lookup
        const int ck = std::min(static_cast<int>(std::floor(u_k.x())), frame_k.intrinsics.width - 2);
        const int rk = std::min(static_cast<int>(std::floor(u_k.y())), frame_k.intrinsics.height - 2);
        if (!mask_k(rk, ck) || !mask_k(rk, ck + 1) || !mask_k(rk + 1, ck) ||
            !mask_k(rk + 1, ck + 1))
          continue;
        const int rr = static_cast<int>(std::lround(u_k.y()));
        const int rc = static_cast<int>(std::lround(u_k.x()));
        if (!smooth_depth_at(frame_k.depth, rr, rc, options.crease_rel)) continue;
        const auto d_k = ingest::depth_at(frame_k.depth, frame_k.intrinsics, u_k);
        if (!d_k) continue;
        // reject gross occlusions: the warped depth must agree with the map
        if (std::abs(warped_metric.z() - *d_k) > options.occlusion_rel * (*d_k)) continue;

        out.terms.push_back({i, x_i});
      }
    }
  }
  return out;
}

double frozen_energy(const ingest::SceneBundle& scene, const CorrespondenceSet& corr,
                     const std::vector<geom::Posed>& poses, const std::vector<double>& scales,
                     const RefineOptions& options) {
  return evaluate(scene, corr, poses, scales, options, false).energy;
}

Eigen::VectorXd frozen_energy_gradient(const ingest::SceneBundle& scene,
                                       const CorrespondenceSet& corr,
                                       const std::vector<geom::Posed>& poses,
                                       const std::vector<double>& scales,
                                       const RefineOptions& options) {
  return evaluate(scene, corr, poses, scales, options, true).gradient;
}

RefinementResult refine_poses_scales(const ingest::SceneBundle& scene, double s_g,
                                     const RefineOptions& options) {
  if (!(s_g > 0.0)) throw Error(ErrorCode::InvalidArgument, "global scale must be positive");
  const int k = select_reference_frame(scene);
  const int frames = scene.frame_count();

  RefinementResult result;
  result.reference_index = k;
  result.scales.assign(frames, s_g);
  result.poses.reserve(frames);
  for (const auto& frame : scene.frames) result.poses.push_back(frame.pose_init);

  for (int outer = 0; outer < options.max_outer; ++outer) {
    const auto corr = build_correspondences(scene, result.poses, result.scales, k, options);
    if (corr.terms.empty()) {
      if (outer == 0)
        throw Error(ErrorCode::EmptyOverlap, "no co-visible static pixels between frames");
      break;
    }

    double energy = frozen_energy(scene, corr, result.poses, result.scales, options);
    if (!result.energy_trace.empty() && energy > result.energy_trace.back()) {
      // the rebuilt participating set raised the energy: treat as converged
      break;
    }
    result.energy_trace.push_back(energy);
    const double outer_start = energy;

    for (int inner = 0; inner < options.max_inner; ++inner) {
      const auto eval = evaluate(scene, corr, result.poses, result.scales, options, true);
      if (eval.gradient.squaredNorm() < 1e-28) break;

      // damped per-frame Gauss-Newton direction
      Eigen::VectorXd delta(7 * (frames - 1));
      int next = 0;
      for (int i = 0; i < frames; ++i) {
        if (i == k) continue;
        Eigen::Matrix<double, 7, 7> h = eval.hessian[i];
        const double damping = 1e-9 * std::max(h.diagonal().maxCoeff(), 1e-300);
        h.diagonal().array() += damping;
        delta.segment<7>(7 * next++) = h.ldlt().solve(-eval.rhs[i]);
      }

      double alpha = 1.0;
      bool accepted = false;
      for (int halvings = 0; halvings <= options.max_halvings; ++halvings) {
        auto poses_try = result.poses;
        auto scales_try = result.scales;
        apply_step(poses_try, scales_try, k, delta, alpha);
        const double trial = frozen_energy(scene, corr, poses_try, scales_try, options);
        if (trial <= energy) {
          const double rel_change = (energy - trial) / std::max(energy, 1e-300);
          result.poses = std::move(poses_try);
          result.scales = std::move(scales_try);
          energy = trial;
          result.energy_trace.push_back(energy);
          accepted = true;
          if (rel_change < options.tolerance) inner = options.max_inner;  // converged
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // a vanishing fraction of the Newton step no longer changes the
        // energy: numerically flat, not divergence
        if (alpha * eval.gradient.norm() * delta.norm() <
            1e-18 * std::max(energy, 1e-18))
          break;
        throw Error(ErrorCode::DivergedOptimization,
                    "energy increased after maximum step halvings");
      }
    }

    if (!options.recompute_correspondences) break;
    if (outer_start - energy < options.tolerance * std::max(outer_start, 1e-300)) break;
  }
  return result;
}

}  // namespace affordkit::metric
