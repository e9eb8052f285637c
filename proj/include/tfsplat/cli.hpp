#pragma once

#include <iosfwd>

namespace tfsplat {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tfsplat
