#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace affordkit::cli {

/// Analytic-vs-central-finite-difference comparison over seeded evaluation
/// points. Known targets: eq2, goal, collide, normal, trilinear, mlp.
struct GradcheckOptions {
  int points_per_target = 100;
  double threshold = 1e-4;
  /// Test fixture: scales the named target's analytic gradient so the check
  /// must fail. Empty disables the fault.
  std::string corrupt_target;
};

struct GradcheckTarget {
  std::string name;
  double worst_rel_error = 0.0;
  int evaluations = 0;
};

struct GradcheckReport {
  std::vector<GradcheckTarget> targets;
  double threshold = 1e-4;

  bool passed() const {
    for (const auto& t : targets)
      if (!(t.worst_rel_error < threshold)) return false;
    return true;
  }
};

GradcheckReport run_gradcheck(const std::vector<std::string>& targets, std::uint64_t seed,
                              const GradcheckOptions& options = {});

}  // namespace affordkit::cli
