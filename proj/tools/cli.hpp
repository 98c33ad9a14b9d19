#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jsdscore::cli {

/// Exit codes: 0 success, 1 data or model error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `jsdscore` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace jsdscore::cli
