#include "affordkit/afford/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "affordkit/core/error.hpp"
#include "affordkit/geom/camera.hpp"

namespace affordkit::afford {

Heatmap fit_heatmap(const Points3& points, const ingest::FrameObservation& frame,
                    double sigma_px) {
  const auto& K = frame.intrinsics;
  std::vector<Vec2> pixels;
  std::vector<double> depths;
  bool any_inside = false;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vec3 p = points.row(i).transpose();
    if (p.z() <= geom::kMinProjectionDepth) continue;
    const Vec2 px = geom::project<double>(p, K);
    pixels.push_back(px);
    depths.push_back(p.z());
    any_inside = any_inside || K.in_image(px.x(), px.y());
  }
  if (pixels.empty() || !any_inside)
    throw Error(ErrorCode::NoVisiblePoints, "no label point projects into the image");

  Heatmap map;
  map.grid = ImageXd::Zero(K.height, K.width);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma_px * sigma_px);
  for (int r = 0; r < K.height; ++r)
    for (int c = 0; c < K.width; ++c) {
      double value = 0.0;
      for (const auto& px : pixels) {
        const double du = c - px.x();
        const double dv = r - px.y();
        value += std::exp(-(du * du + dv * dv) * inv_two_sigma2);
      }
      map.grid(r, c) = value;
    }
  map.grid /= map.grid.maxCoeff();

  std::sort(depths.begin(), depths.end());
  const std::size_t n = depths.size();
  map.goal_depth = n % 2 == 1 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
  return map;
}

namespace {

double mean_bce(const ImageXd& pred, const ImageXd& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw Error(ErrorCode::DimensionMismatch, "heatmap shapes differ");
  // each log argument is floored separately so exact binary hits cost zero
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = pred.data()[i];
    const double q = gt.data()[i];
    total += -(q * std::log(std::max(p, 1e-7)) +
               (1.0 - q) * std::log(std::max(1.0 - p, 1e-7)));
  }
  return total / static_cast<double>(pred.size());
}

}  // namespace

CoarseLosses coarse_losses(const Heatmap& pred_goal, const Heatmap& gt_goal,
                           const Heatmap& pred_contact, const Heatmap& gt_contact,
                           double lambda_d) {
  CoarseLosses losses;
  const double depth_err = pred_goal.goal_depth - gt_goal.goal_depth;
  losses.goal = mean_bce(pred_goal.grid, gt_goal.grid) + lambda_d * depth_err * depth_err;
  losses.contact = mean_bce(pred_contact.grid, gt_contact.grid);
  return losses;
}

namespace {

ScoredPoints lift_impl(const Heatmap& heatmap, const ImageXd* depth_map, double const_depth,
                       const geom::Intrinsicsd& K, int n, double threshold) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  struct Candidate {
    double value;
    Eigen::Index flat;  // row-major index; ascending keeps ties deterministic
    double depth;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index r = 0; r < heatmap.grid.rows(); ++r)
    for (Eigen::Index c = 0; c < heatmap.grid.cols(); ++c) {
      const double value = heatmap.grid(r, c);
      if (value < threshold) continue;
      const double d = depth_map ? (*depth_map)(r, c) : const_depth;
      if (!std::isfinite(d) || d <= 0.0) continue;
      candidates.push_back({value, r * heatmap.grid.cols() + c, d});
    }
  if (candidates.empty())
    throw Error(ErrorCode::NothingAboveThreshold, "no pixel above threshold with valid depth");

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.flat < b.flat;
  });
  const int keep = std::min<int>(n, static_cast<int>(candidates.size()));

  ScoredPoints out;
  out.points.resize(keep, 3);
  out.scores.resize(keep);
  for (int i = 0; i < keep; ++i) {
    const auto& cand = candidates[i];
    const double u = static_cast<double>(cand.flat % heatmap.grid.cols());
    const double v = static_cast<double>(cand.flat / heatmap.grid.cols());
    out.points.row(i) = geom::backproject<double>(Vec2(u, v), cand.depth, K).transpose();
    out.scores[i] = cand.value;
  }
  return out;
}

}  // namespace

ScoredPoints lift_heatmap_to_points(const Heatmap& heatmap, const ImageXd& depth,
                                    const geom::Intrinsicsd& K, int n, double threshold) {
  return lift_impl(heatmap, &depth, 0.0, K, n, threshold);
}

ScoredPoints lift_heatmap_to_points(const Heatmap& heatmap, double goal_depth,
                                    const geom::Intrinsicsd& K, int n, double threshold) {
  return lift_impl(heatmap, nullptr, goal_depth, K, n, threshold);
}

}  // namespace affordkit::afford
