#pragma once

#include <string>
#include <vector>

namespace affordkit::cli {

/// Dispatches one subcommand. Returns 0 on success, 1 on a domain error,
/// 2 on a usage error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace affordkit::cli
