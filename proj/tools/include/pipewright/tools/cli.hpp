#pragma once

#include <iosfwd>

namespace pipewright::tools {

/// Runs the `pipewright` command line. Returns the process exit code.
/// Usage errors go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pipewright::tools
