#pragma once

#include <string>
#include <vector>

namespace adaseg::cli {

/// Runs one CLI invocation (argv without the program name) and returns the
/// process exit code: 0 success, 2 usage/config error, 1 runtime failure.
/// Re-entrant so tests can drive subcommands in-process.
int run(const std::vector<std::string>& args);

}  // namespace adaseg::cli
