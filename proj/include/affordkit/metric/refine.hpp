#pragma once

#include <optional>
#include <vector>

#include "affordkit/ingest/scene.hpp"
#include "affordkit/metric/scale.hpp"

namespace affordkit::metric {

struct RefineOptions {
  int max_outer = 10;          // correspondence-set rebuilds
  int max_inner = 150;         // Gauss-Newton steps per rebuild
  double tolerance = 1e-10;    // relative energy change for convergence
  int max_halvings = 40;       // line-search halvings per step
  int stride = 4;              // pixel decimation of the dense sum
  double occlusion_rel = 0.1;  // reject warps whose depth disagrees by more
  double crease_rel = 0.002;   // reject pixels whose depth curvature exceeds this
                               // fraction of the depth (creases, discontinuities)
  double huber_delta = 0.0;    // robust kernel width in scale-unaware units; 0 = off
  bool recompute_correspondences = true;
};

struct RefinementResult {
  std::vector<geom::Posed> poses;  // world-from-camera, frame k untouched
  std::vector<double> scales;      // per-frame depth scales, scales[k] == s_g
  int reference_index = 0;
  std::vector<double> energy_trace;  // mean squared residual per accepted step
};

/// Warps pixel u_i from frame i into reference frame k through the predicted
/// depth: back-project metrically, divide by s_i, apply the relative pose,
/// and re-project. Empty when the warp leaves the image, lands behind the
/// camera, or hits invalid depth.
std::optional<Vec2> projective_correspondence(const ingest::SceneBundle& scene, int i, int k,
                                              const Vec2& pixel,
                                              const std::vector<double>& scales,
                                              const std::vector<geom::Posed>& poses);

/// Cross-view depth consistency refinement: minimizes the mean squared
/// residual || T_CkCi (X_i / s_i) - X_k(u_k) / s_k ||^2 over the non-reference
/// twists and log-scales, where u_k is the projective correspondence of the
/// warped point and X_k its back-projection through the reference depth map.
/// The participating pixel set is rebuilt each outer iteration and frozen
/// within it; the warped lookup itself follows the poses, so the energy is a
/// single differentiable function of the parameters. Descent is per-frame
/// damped Gauss-Newton with a halving line search; the recorded energy trace
/// never increases.
RefinementResult refine_poses_scales(const ingest::SceneBundle& scene, double s_g,
                                     const RefineOptions& options = {});

/// One frozen participating set: the source pixels (as metric back-projected
/// points) that survived the mask, validity, occlusion, and smoothness
/// checks at build time. Exposed for the verification harness.
struct CorrespondenceSet {
  struct Term {
    int frame = 0;  // source frame i
    Vec3 point_i;   // metric back-projection in camera i
  };
  std::vector<Term> terms;
  int reference_index = 0;
};

CorrespondenceSet build_correspondences(const ingest::SceneBundle& scene,
                                        const std::vector<geom::Posed>& poses,
                                        const std::vector<double>& scales, int k,
                                        const RefineOptions& options);

/// Mean energy of the frozen set under the given poses/scales, with reference
/// targets evaluated through the depth map at the current warp.
double frozen_energy(const ingest::SceneBundle& scene, const CorrespondenceSet& corr,
                     const std::vector<geom::Posed>& poses, const std::vector<double>& scales,
                     const RefineOptions& options);

/// Analytic gradient of frozen_energy, chained through the projection and the
/// bilinear depth lookup. Layout: per non-reference frame, six twist
/// coordinates (rotation then translation, left-multiplied increments on the
/// world-from-camera pose) followed by one log-scale coordinate; frames
/// ordered by index, reference frame skipped.
Eigen::VectorXd frozen_energy_gradient(const ingest::SceneBundle& scene,
                                       const CorrespondenceSet& corr,
                                       const std::vector<geom::Posed>& poses,
                                       const std::vector<double>& scales,
                                       const RefineOptions& options);

}  // namespace affordkit::metric
