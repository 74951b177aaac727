#pragma once

#include <filesystem>
#include <vector>

#include "affordkit/core/types.hpp"
#include "affordkit/geom/intrinsics.hpp"
#include "affordkit/geom/pose.hpp"

namespace affordkit::tsdf {

/// Dense truncated signed distance grid. Values are distance/truncation
/// clamped to [-1, 1]; unobserved voxels (weight 0) read as +1 (free).
/// The voxel with index (0,0,0) is centered at `origin`; storage order is
/// x fastest, then y, then z.
struct TsdfVolume {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.01;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  double truncation = 0.05;
  std::vector<double> values;
  std::vector<double> weights;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  }
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * dims.y() + iy) * dims.x() + ix;
  }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return origin + voxel_size * Vec3(ix, iy, iz);
  }
};

/// Allocates a grid covering [lower, upper] (meters), all voxels unobserved.
TsdfVolume make_volume(const Vec3& lower, const Vec3& upper, double voxel_size,
                       double truncation);

/// Integrates one depth frame: projective signed distance along the camera
/// ray, clamped to the truncation band, averaged into the grid with unit
/// per-update weight. Voxels beyond the surface by more than the truncation
/// are left untouched.
void fuse_frame(TsdfVolume& volume, const ImageXd& depth, const geom::Intrinsicsd& K,
                const geom::Posed& world_from_camera);

/// Trilinear interpolation over the eight surrounding voxel centers; +1
/// outside the grid.
double query(const TsdfVolume& volume, const Vec3& p);

/// Analytic gradient of the trilinear interpolant (per meter); zero outside
/// the grid.
Vec3 query_gradient(const TsdfVolume& volume, const Vec3& p);

/// Normalized gradient. Throws DegenerateNormal when the gradient vanishes.
Vec3 surface_normal_at(const TsdfVolume& volume, const Vec3& p);

/// Normalized mean of per-point normals; used to derive the contact normal
/// from a set of contact points.
Vec3 normal_from_points(const TsdfVolume& volume, const Points3& points);

void save_volume(const TsdfVolume& volume, const std::filesystem::path& path);
TsdfVolume load_volume(const std::filesystem::path& path);

}  // namespace affordkit::tsdf
