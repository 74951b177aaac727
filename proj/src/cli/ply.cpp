#include "affordkit/cli/ply.hpp"

#include <fstream>

#include "affordkit/core/error.hpp"
#include "affordkit/core/io.hpp"

namespace affordkit::cli {

void export_ply(const Points3& points, const std::vector<Trajectory>& trajectories,
                const std::vector<std::uint8_t>& gray, const std::filesystem::path& path) {
  std::size_t vertex_count = static_cast<std::size_t>(points.rows());
  std::size_t edge_count = 0;
  for (const auto& t : trajectories) {
    vertex_count += static_cast<std::size_t>(t.rows());
    if (t.rows() > 1) edge_count += static_cast<std::size_t>(t.rows()) - 1;
  }
  if (vertex_count == 0) throw Error(ErrorCode::InvalidArgument, "nothing to export");

  atomic_write(path, [&](std::ofstream& out) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << vertex_count << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element edge " << edge_count << "\n";
    out << "property int vertex1\nproperty int vertex2\n";
    out << "end_header\n";

    for (Eigen::Index i = 0; i < points.rows(); ++i)
      out << static_cast<float>(points(i, 0)) << " " << static_cast<float>(points(i, 1)) << " "
          << static_cast<float>(points(i, 2)) << " 128 128 128\n";

    std::size_t base = static_cast<std::size_t>(points.rows());
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
      const auto& traj = trajectories[t];
      const int shade = t < gray.size() ? gray[t] : 128;
      for (Eigen::Index h = 0; h < traj.rows(); ++h) {
        out << static_cast<float>(traj(h, 0)) << " " << static_cast<float>(traj(h, 1)) << " "
            << static_cast<float>(traj(h, 2)) << " " << shade << " " << shade << " " << shade
            << "\n";
        if (h > 0) edges.emplace_back(base + h - 1, base + h);
      }
      base += static_cast<std::size_t>(traj.rows());
    }
    for (const auto& [a, b] : edges) out << a << " " << b << "\n";
  });
}

}  // namespace affordkit::cli
