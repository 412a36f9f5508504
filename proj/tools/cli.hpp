#pragma once

#include <iosfwd>

namespace mathkg {

/// Entry point of the mathkg tool. Returns the process exit status:
/// 0 on success, 1 on a failed command, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mathkg
