#pragma once

#include <iosfwd>

namespace pnsim {

/// Exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

/// Default output directory comes from PNSIM_OUT_DIR when --out is absent.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pnsim
