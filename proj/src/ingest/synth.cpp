#include "affordkit/ingest/synth.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <limits>

#include "affordkit/core/error.hpp"
#include "affordkit/core/rng.hpp"
#include "affordkit/geom/camera.hpp"

namespace affordkit::ingest {

namespace {

/// Static environment behind the cameras' view. FrontoWall is a single plane
/// normal to z (depth constant per frame under pure translation, so residuals
/// are exact to rounding). Bowl is the inside of a triaxial ellipsoid:
/// smooth, crease free, near-normal incidence, and with no continuous
/// self-symmetry, so every pose and per-frame-scale direction is observable.
/// (Planes admit point-similarity gauges and spheres admit rotations about
/// their center; either leaves part of the state unconstrained.)
struct SceneSurface {
  bool is_plane = true;
  Vec3 plane_normal{0, 0, 1};  // unit, pointing away from the cameras
  double plane_offset = 1.25;  // points p on the plane satisfy normal . p = offset
  Vec3 bowl_center{0.05, 0.03, 0.10};
  Vec3 bowl_semi_axes{1.80, 1.05, 1.40};
};

SceneSurface scene_surface(const SynthConfig& cfg) {
  SceneSurface s;
  s.is_plane = cfg.geometry == SynthGeometry::FrontoWall;
  return s;
}

/// Positive ray parameter hitting the surface; the ray is
/// origin + lambda * dir with dir the unnormalized pixel direction, so
/// lambda equals the camera-frame z-depth.
double cast_surface(const SceneSurface& surface, const Vec3& origin, const Vec3& dir) {
  if (surface.is_plane) {
    const double denom = surface.plane_normal.dot(dir);
    if (denom <= 1e-12) return std::numeric_limits<double>::infinity();
    const double lambda = (surface.plane_offset - surface.plane_normal.dot(origin)) / denom;
    return lambda > 1e-9 ? lambda : std::numeric_limits<double>::infinity();
  }
  // inner ellipsoid intersection from a camera inside the bowl
  const Vec3 inv_axes = surface.bowl_semi_axes.cwiseInverse();
  const Vec3 rel = (origin - surface.bowl_center).cwiseProduct(inv_axes);
  const Vec3 d = dir.cwiseProduct(inv_axes);
  const double a = d.squaredNorm();
  const double b = d.dot(rel);
  const double c = rel.squaredNorm() - 1.0;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double lambda = (-b + std::sqrt(disc)) / a;
  return lambda > 1e-9 ? lambda : std::numeric_limits<double>::infinity();
}

geom::Posed look_at(const Vec3& position, const Vec3& target) {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = Vec3(0, 1, 0).cross(forward);
  if (right.norm() < 1e-9) right = Vec3(1, 0, 0);
  right.normalize();
  const Vec3 down = forward.cross(right);
  Eigen::Matrix3d rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  return geom::Posed(Eigen::Quaterniond(rot), position);
}

Vec3 bezier(const Vec3& a, const Vec3& b, const Vec3& c, double t) {
  const double u = 1.0 - t;
  return u * u * a + 2.0 * u * t * b + t * t * c;
}

Vec3 random_unit(Rng& rng) {
  while (true) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

}  // namespace

std::pair<SceneBundle, GroundTruth> synth_scene(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.frames < 2) throw Error(ErrorCode::DegenerateConfig, "need at least 2 frames");
  if (cfg.landmarks < 8) throw Error(ErrorCode::DegenerateConfig, "need at least 8 landmarks");
  if (!(cfg.scale > 0.0)) throw Error(ErrorCode::DegenerateConfig, "scale must be positive");
  if (cfg.depth_noise < 0.0) throw Error(ErrorCode::DegenerateConfig, "negative depth noise");
  if (cfg.arc_span == 0.0 && cfg.arc_bump == 0.0)
    throw Error(ErrorCode::DegenerateConfig, "all cameras coincident");

  Rng rng(seed);
  const auto surface = scene_surface(cfg);

  geom::Intrinsicsd K;
  K.fx = K.fy = cfg.focal;
  K.cx = (cfg.width - 1) / 2.0;
  K.cy = (cfg.height - 1) / 2.0;
  K.width = cfg.width;
  K.height = cfg.height;
  K.validate();

  // true camera poses along a C1 arc
  std::vector<geom::Posed> poses;
  for (int i = 0; i < cfg.frames; ++i) {
    const double t = static_cast<double>(i) / (cfg.frames - 1);
    const Vec3 position(cfg.arc_span * (t - 0.5), cfg.arc_bump * std::sin(M_PI * t),
                        0.15 * cfg.arc_span * (t - 0.5));
    if (cfg.geometry == SynthGeometry::FrontoWall) {
      poses.emplace_back(Eigen::Quaterniond::Identity(), position);
    } else {
      poses.push_back(look_at(position, Vec3(0.06, 0.04, 1.10)));
    }
  }

  const double s_g = cfg.scale;
  const double blob_radius = cfg.hand_radius;

  std::vector<Vec3> blob_centers(cfg.frames);
  for (int i = 0; i < cfg.frames; ++i) {
    const double t = static_cast<double>(i) / (cfg.frames - 1);
    blob_centers[i] = bezier(cfg.hand_start, cfg.hand_mid, cfg.hand_end, t);
  }

  // landmarks anchored on the static surfaces through exact pixel-center rays
  SceneBundle bundle;
  int next_id = 0;
  int attempts = 0;
  while (static_cast<int>(bundle.landmarks.size()) < cfg.landmarks && attempts < cfg.landmarks * 50) {
    ++attempts;
    const int anchor = rng.uniform_int(0, cfg.frames - 1);
    const double u = rng.uniform(8.0, cfg.width - 9.0);
    const double v = rng.uniform(8.0, cfg.height - 9.0);
    const Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
    const auto& pose = poses[anchor];
    const Vec3 dir_world = pose.rotation() * dir_cam;
    const double lambda = cast_surface(surface, pose.translation(), dir_world);
    if (!std::isfinite(lambda)) continue;
    const Vec3 point = pose.translation() + lambda * dir_world;

    Landmark lm;
    lm.id = next_id;
    lm.position = point;
    for (int i = 0; i < cfg.frames; ++i) {
      const Vec3 local = poses[i].inverse() * point;
      if (local.z() <= 1e-6) continue;
      const Vec2 pixel = geom::project<double>(local, K);
      if (!K.in_image(pixel.x(), pixel.y())) continue;
      lm.observations.push_back({i, pixel});
    }
    if (lm.observations.size() < 2) continue;
    bundle.landmarks.push_back(std::move(lm));
    ++next_id;
  }
  if (static_cast<int>(bundle.landmarks.size()) < cfg.landmarks)
    throw Error(ErrorCode::DegenerateConfig, "could not place the requested landmarks");

  // rendered frames
  for (int i = 0; i < cfg.frames; ++i) {
    FrameObservation frame;
    frame.index = i;
    frame.intrinsics = K;
    frame.depth = ImageXd(cfg.height, cfg.width);
    frame.hand_mask = ImageXb::Zero(cfg.height, cfg.width);
    frame.object_mask = ImageXb::Zero(cfg.height, cfg.width);

    const auto& pose = poses[i];
    const Eigen::Matrix3d rot = pose.rotation_matrix();
    const Vec3 origin = pose.translation();
    const Vec3 blob_local = pose.inverse() * blob_centers[i];

    for (int r = 0; r < cfg.height; ++r) {
      for (int c = 0; c < cfg.width; ++c) {
        const Vec3 dir_cam((c - K.cx) / K.fx, (r - K.cy) / K.fy, 1.0);
        const Vec3 dir_world = rot * dir_cam;
        double depth = cast_surface(surface, origin, dir_world);

        if (cfg.hand && blob_local.z() > blob_radius) {
          // billboard blob: circular silhouette around the projected center
          // with constant depth, so mask centroid + median depth reproduce
          // the center exactly (a paraxial sphere without the perspective
          // ellipse-center bias)
          const double u0 = K.fx * blob_local.x() / blob_local.z() + K.cx;
          const double v0 = K.fy * blob_local.y() / blob_local.z() + K.cy;
          const double radius_px = K.fx * blob_radius / blob_local.z();
          const double du = c - u0, dv = r - v0;
          if (du * du + dv * dv <= radius_px * radius_px && blob_local.z() < depth) {
            depth = blob_local.z();
            frame.hand_mask(r, c) = 1;
          }
        }

        double metric = std::isfinite(depth) ? s_g * depth
                                             : std::numeric_limits<double>::quiet_NaN();
        if (cfg.depth_noise > 0.0 && std::isfinite(metric))
          metric = std::max(1e-6, metric * (1.0 + cfg.depth_noise * rng.normal()));
        frame.depth(r, c) = metric;
      }
    }

    frame.pose_init = pose;
    if (cfg.pose_noise_rot > 0.0 || cfg.pose_noise_trans > 0.0) {
      const Vec3 axis = random_unit(rng);
      const Vec3 dir = random_unit(rng);
      const Eigen::Quaterniond dq(Eigen::AngleAxisd(cfg.pose_noise_rot, axis));
      frame.pose_init = geom::Posed(pose.rotation() * dq,
                                    pose.translation() + cfg.pose_noise_trans * dir);
    }
    bundle.frames.push_back(std::move(frame));
  }
  compute_static_masks(bundle);

  GroundTruth gt;
  gt.s_g = s_g;
  gt.scales.assign(cfg.frames, s_g);
  gt.poses = poses;
  if (cfg.hand) {
    gt.hand_trajectory.resize(cfg.frames, 3);
    const geom::Posed world_from_cam0 = poses.front();
    for (int i = 0; i < cfg.frames; ++i)
      gt.hand_trajectory.row(i) = (s_g * (world_from_cam0.inverse() * blob_centers[i])).transpose();
  } else {
    gt.hand_trajectory.resize(0, 3);
  }
  return {std::move(bundle), std::move(gt)};
}

}  // namespace affordkit::ingest
