#pragma once

#include <ostream>

namespace mixmodal {

/// Entry point of mixctl. Subcommands: simulate, fit, select, diagnose,
/// oracle. Returns 0 on success, 2 on configuration errors and 3 on
/// numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixmodal
