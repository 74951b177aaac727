#include "affordkit/afford/extract.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "affordkit/core/error.hpp"
#include "affordkit/geom/camera.hpp"

namespace affordkit::afford {

namespace {

struct HandPixels {
  Vec2 centroid = Vec2::Zero();
  double median_depth = 0.0;
};

HandPixels hand_center(const ingest::FrameObservation& frame) {
  double sum_u = 0.0, sum_v = 0.0;
  long count = 0;
  std::vector<double> depths;
  for (int r = 0; r < frame.intrinsics.height; ++r) {
    for (int c = 0; c < frame.intrinsics.width; ++c) {
      if (!frame.hand_mask(r, c)) continue;
      sum_u += c;
      sum_v += r;
      ++count;
      const double d = frame.depth(r, c);
      if (std::isfinite(d) && d > 0.0) depths.push_back(d);
    }
  }
  if (count == 0)
    throw Error(ErrorCode::EmptyHandMask, "frame " + std::to_string(frame.index));
  if (depths.empty())
    throw Error(ErrorCode::NoValidHandDepth, "frame " + std::to_string(frame.index));

  std::sort(depths.begin(), depths.end());
  const std::size_t n = depths.size();
  const double median =
      n % 2 == 1 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
  return {Vec2(sum_u / count, sum_v / count), median};
}

/// Metric similarity carrying camera-i points into metric frame-0
/// coordinates: divide by s_i, apply the relative pose, multiply by s_0.
Vec3 carry_to_frame0(const Vec3& point_metric, int i, const metric::RefinementResult& refined) {
  const geom::Posed rel = refined.poses[0].inverse() * refined.poses[i];
  return refined.scales[0] * (rel * (point_metric / refined.scales[i]));
}

}  // namespace

Trajectory extract_trajectory(const ingest::SceneBundle& scene,
                              const metric::RefinementResult& refined) {
  const int frames = scene.frame_count();
  Trajectory traj(frames, 3);
  for (int i = 0; i < frames; ++i) {
    const auto hand = hand_center(scene.frames[i]);
    const Vec3 local =
        geom::backproject<double>(hand.centroid, hand.median_depth, scene.frames[i].intrinsics);
    traj.row(i) = carry_to_frame0(local, i, refined).transpose();
  }
  return traj;
}

Points3 downsample_uniform(const Points3& points, int target, double voxel) {
  if (points.rows() == 0 || target <= 0) return Points3(0, 3);
  if (!(voxel > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel must be positive");

  // bin into voxel cells; ordered map keys give the deterministic cell order
  std::map<std::tuple<long, long, long>, std::vector<Eigen::Index>> cells;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto key = std::make_tuple(static_cast<long>(std::floor(points(i, 0) / voxel)),
                                     static_cast<long>(std::floor(points(i, 1) / voxel)),
                                     static_cast<long>(std::floor(points(i, 2) / voxel)));
    cells[key].push_back(i);
  }

  // per cell, keep the member nearest the cell mean
  Points3 reps(cells.size(), 3);
  Eigen::Index at = 0;
  for (const auto& [key, members] : cells) {
    Vec3 mean = Vec3::Zero();
    for (Eigen::Index idx : members) mean += points.row(idx).transpose();
    mean /= static_cast<double>(members.size());
    Eigen::Index best = members.front();
    double best_sq = (points.row(best).transpose() - mean).squaredNorm();
    for (Eigen::Index idx : members) {
      const double sq = (points.row(idx).transpose() - mean).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = idx;
      }
    }
    reps.row(at++) = points.row(best);
  }

  if (reps.rows() <= target) return reps;

  // farthest-point selection seeded at the representative nearest the
  // global centroid; spreads the kept points uniformly
  const Vec3 centroid = reps.colwise().mean().transpose();
  Eigen::Index seed = 0;
  double seed_sq = (reps.row(0).transpose() - centroid).squaredNorm();
  for (Eigen::Index i = 1; i < reps.rows(); ++i) {
    const double sq = (reps.row(i).transpose() - centroid).squaredNorm();
    if (sq < seed_sq) {
      seed_sq = sq;
      seed = i;
    }
  }

  std::vector<Eigen::Index> chosen{seed};
  Eigen::VectorXd dist(reps.rows());
  for (Eigen::Index i = 0; i < reps.rows(); ++i)
    dist[i] = (reps.row(i) - reps.row(seed)).squaredNorm();
  while (static_cast<int>(chosen.size()) < target) {
    Eigen::Index far = 0;
    for (Eigen::Index i = 1; i < reps.rows(); ++i)
      if (dist[i] > dist[far]) far = i;
    chosen.push_back(far);
    for (Eigen::Index i = 0; i < reps.rows(); ++i)
      dist[i] = std::min(dist[i], (reps.row(i) - reps.row(far)).squaredNorm());
  }

  Points3 out(chosen.size(), 3);
  for (std::size_t i = 0; i < chosen.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = reps.row(chosen[i]);
  return out;
}

std::pair<Points3, Points3> extract_contact_goal(const ingest::SceneBundle& scene,
                                                 const metric::RefinementResult& refined,
                                                 int n_contact, int n_goal, double voxel) {
  const int last = scene.frame_count() - 1;
  const auto collect = [&](int frame_index) {
    const auto& frame = scene.frames[frame_index];
    std::vector<Vec3> pts;
    for (int r = 0; r < frame.intrinsics.height; ++r)
      for (int c = 0; c < frame.intrinsics.width; ++c) {
        if (!frame.hand_mask(r, c)) continue;
        const double d = frame.depth(r, c);
        if (!std::isfinite(d) || d <= 0.0) continue;
        const Vec3 local = geom::backproject<double>(Vec2(c, r), d, frame.intrinsics);
        pts.push_back(carry_to_frame0(local, frame_index, refined));
      }
    if (pts.empty())
      throw Error(ErrorCode::EmptyHandMask,
                  "no valid hand pixels in frame " + std::to_string(frame_index));
    Points3 out(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    return out;
  };

  Points3 contact = downsample_uniform(collect(0), n_contact, voxel);
  Points3 goal = downsample_uniform(collect(last), n_goal, voxel);
  return {std::move(contact), std::move(goal)};
}

}  // namespace affordkit::afford
