#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bsmix::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsageError = 2;

/// Entry point shared by the bsmix executable and the tests. `args` excludes
/// the program name. Failures print one JSON error line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bsmix::cli
