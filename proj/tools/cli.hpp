#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace confbayes::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs the tool on argv-style arguments (program name excluded). Returns the
// process exit code: 0 success, 2 usage or validation error, 3 numeric or
// model failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace confbayes::cli
