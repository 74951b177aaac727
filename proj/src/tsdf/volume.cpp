#include "affordkit/tsdf/volume.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "affordkit/core/error.hpp"
#include "affordkit/core/io.hpp"
#include "affordkit/geom/camera.hpp"

namespace affordkit::tsdf {

using nlohmann::json;

TsdfVolume make_volume(const Vec3& lower, const Vec3& upper, double voxel_size,
                       double truncation) {
  if (!(voxel_size > 0.0) || !(truncation > 0.0))
    throw Error(ErrorCode::InvalidArgument, "voxel size and truncation must be positive");
  TsdfVolume vol;
  vol.origin = lower;
  vol.voxel_size = voxel_size;
  vol.truncation = truncation;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = static_cast<int>(std::ceil((upper[axis] - lower[axis]) / voxel_size)) + 1;
    vol.dims[axis] = std::max(n, 2);
  }
  if (vol.voxel_count() > (std::size_t(1) << 27))
    throw Error(ErrorCode::InvalidArgument,
                "grid would exceed 128M voxels; use a coarser voxel size or a "
                "narrower depth range");
  vol.values.assign(vol.voxel_count(), 1.0);
  vol.weights.assign(vol.voxel_count(), 0.0);
  return vol;
}

void fuse_frame(TsdfVolume& volume, const ImageXd& depth, const geom::Intrinsicsd& K,
                const geom::Posed& world_from_camera) {
  if (depth.rows() != K.height || depth.cols() != K.width)
    throw Error(ErrorCode::DimensionMismatch, "depth map does not match intrinsics");
  const geom::Posed camera_from_world = world_from_camera.inverse();

  for (int iz = 0; iz < volume.dims.z(); ++iz) {
    for (int iy = 0; iy < volume.dims.y(); ++iy) {
      for (int ix = 0; ix < volume.dims.x(); ++ix) {
        const Vec3 local = camera_from_world * volume.voxel_center(ix, iy, iz);
        if (local.z() <= geom::kMinProjectionDepth) continue;
        const Vec2 pixel = geom::project<double>(local, K);
        const int c = static_cast<int>(std::lround(pixel.x()));
        const int r = static_cast<int>(std::lround(pixel.y()));
        if (c < 0 || c >= K.width || r < 0 || r >= K.height) continue;
        const double d = depth(r, c);
        if (!std::isfinite(d) || d <= 0.0) continue;
        if (local.z() > d + volume.truncation) continue;  // hidden behind the surface

        const double sdf = std::clamp((d - local.z()) / volume.truncation, -1.0, 1.0);
        const std::size_t idx = volume.index(ix, iy, iz);
        const double w = volume.weights[idx];
        volume.values[idx] = (w > 0.0) ? (volume.values[idx] * w + sdf) / (w + 1.0) : sdf;
        volume.weights[idx] = w + 1.0;
      }
    }
  }
}

namespace {

struct Cell {
  int ix, iy, iz;      // lower corner voxel
  double fx, fy, fz;   // fractional position within the cell
};

bool locate(const TsdfVolume& vol, const Vec3& p, Cell* cell) {
  // small slack so grid corners stay inside despite rounding
  constexpr double kEdgeSlack = 1e-9;
  const Vec3 g = (p - vol.origin) / vol.voxel_size;
  for (int axis = 0; axis < 3; ++axis)
    if (g[axis] < -kEdgeSlack ||
        g[axis] > static_cast<double>(vol.dims[axis] - 1) + kEdgeSlack)
      return false;
  cell->ix = std::clamp(static_cast<int>(std::floor(g.x())), 0, vol.dims.x() - 2);
  cell->iy = std::clamp(static_cast<int>(std::floor(g.y())), 0, vol.dims.y() - 2);
  cell->iz = std::clamp(static_cast<int>(std::floor(g.z())), 0, vol.dims.z() - 2);
  // snap to the lattice so voxel centers read back their stored value exactly
  const auto fraction = [](double g_axis, int idx) {
    const double f = std::clamp(g_axis - idx, 0.0, 1.0);
    if (f < kEdgeSlack) return 0.0;
    if (f > 1.0 - kEdgeSlack) return 1.0;
    return f;
  };
  cell->fx = fraction(g.x(), cell->ix);
  cell->fy = fraction(g.y(), cell->iy);
  cell->fz = fraction(g.z(), cell->iz);
  return true;
}

}  // namespace

double query(const TsdfVolume& volume, const Vec3& p) {
  Cell cell;
  if (!locate(volume, p, &cell)) return 1.0;
  // canonical eight-corner weighted sum
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? cell.fx : 1.0 - cell.fx;
        const double wy = dy ? cell.fy : 1.0 - cell.fy;
        const double wz = dz ? cell.fz : 1.0 - cell.fz;
        acc += wx * wy * wz *
               volume.values[volume.index(cell.ix + dx, cell.iy + dy, cell.iz + dz)];
      }
  return acc;
}

Vec3 query_gradient(const TsdfVolume& volume, const Vec3& p) {
  Cell cell;
  if (!locate(volume, p, &cell)) return Vec3::Zero();
  const auto v = [&](int dx, int dy, int dz) {
    return volume.values[volume.index(cell.ix + dx, cell.iy + dy, cell.iz + dz)];
  };
  const double fx = cell.fx, fy = cell.fy, fz = cell.fz;
  Vec3 grad;
  grad.x() = (v(1, 0, 0) - v(0, 0, 0)) * (1 - fy) * (1 - fz) +
             (v(1, 1, 0) - v(0, 1, 0)) * fy * (1 - fz) +
             (v(1, 0, 1) - v(0, 0, 1)) * (1 - fy) * fz +
             (v(1, 1, 1) - v(0, 1, 1)) * fy * fz;
  grad.y() = (v(0, 1, 0) - v(0, 0, 0)) * (1 - fx) * (1 - fz) +
             (v(1, 1, 0) - v(1, 0, 0)) * fx * (1 - fz) +
             (v(0, 1, 1) - v(0, 0, 1)) * (1 - fx) * fz +
             (v(1, 1, 1) - v(1, 0, 1)) * fx * fz;
  grad.z() = (v(0, 0, 1) - v(0, 0, 0)) * (1 - fx) * (1 - fy) +
             (v(1, 0, 1) - v(1, 0, 0)) * fx * (1 - fy) +
             (v(0, 1, 1) - v(0, 1, 0)) * (1 - fx) * fy +
             (v(1, 1, 1) - v(1, 1, 0)) * fx * fy;
  return grad / volume.voxel_size;
}

Vec3 surface_normal_at(const TsdfVolume& volume, const Vec3& p) {
  const Vec3 g = query_gradient(volume, p);
  const double n = g.norm();
  if (n <= 1e-9) throw Error(ErrorCode::DegenerateNormal, "vanishing distance gradient");
  return g / n;
}

Vec3 normal_from_points(const TsdfVolume& volume, const Points3& points) {
  if (points.rows() == 0) throw Error(ErrorCode::DegenerateNormal, "no points");
  Vec3 sum = Vec3::Zero();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    sum += surface_normal_at(volume, points.row(i).transpose());
  const double n = sum.norm();
  if (n <= 1e-9) throw Error(ErrorCode::DegenerateNormal, "per-point normals cancel");
  return sum / n;
}

void save_volume(const TsdfVolume& volume, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ofstream& out) {
    json header{{"origin", {volume.origin.x(), volume.origin.y(), volume.origin.z()}},
                {"voxel_size", volume.voxel_size},
                {"dims", {volume.dims.x(), volume.dims.y(), volume.dims.z()}},
                {"truncation", volume.truncation}};
    out << header.dump() << "\n";
    std::vector<float> raw(volume.voxel_count());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(volume.values[i]);
    write_f32(out, raw.data(), raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(volume.weights[i]);
    write_f32(out, raw.data(), raw.size());
  });
}

TsdfVolume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "missing volume header");
  TsdfVolume vol;
  try {
    const json header = json::parse(line);
    const auto& o = header.at("origin");
    vol.origin = Vec3(o[0].get<double>(), o[1].get<double>(), o[2].get<double>());
    vol.voxel_size = header.at("voxel_size").get<double>();
    const auto& d = header.at("dims");
    vol.dims = Eigen::Vector3i(d[0].get<int>(), d[1].get<int>(), d[2].get<int>());
    vol.truncation = header.at("truncation").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestParse, std::string("volume header: ") + e.what());
  }
  if (vol.dims.minCoeff() < 2) throw Error(ErrorCode::ManifestParse, "volume dims too small");
  const auto n = vol.voxel_count();
  const auto values = read_f32(in, n);
  const auto weights = read_f32(in, n);
  vol.values.assign(values.begin(), values.end());
  vol.weights.assign(weights.begin(), weights.end());
  return vol;
}

}  // namespace affordkit::tsdf
