#pragma once

#include <filesystem>
#include <vector>

#include "affordkit/core/types.hpp"

namespace affordkit::cli {

/// ASCII PLY export: one vertex element per point and per trajectory
/// waypoint, one edge element per trajectory segment. `gray` colors each
/// trajectory (0 = best cost rank = darkest); loose points render mid-gray.
void export_ply(const Points3& points, const std::vector<Trajectory>& trajectories,
                const std::vector<std::uint8_t>& gray, const std::filesystem::path& path);

}  // namespace affordkit::cli
