#pragma once

#include <iosfwd>

namespace pstitch {

/// Entry point of the pstitch command; returns the process exit code
/// (0 success, 1 stage failure, 2 usage error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pstitch
