#pragma once

#include <iosfwd>

namespace holotrack::cli {

/// Runs the holotrack command line. Returns the process exit code:
/// 0 success, 2 configuration error, 3 data error, 1 anything else.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace holotrack::cli
