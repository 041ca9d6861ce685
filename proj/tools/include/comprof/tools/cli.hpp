#pragma once

#include <iosfwd>

namespace comprof::tools {

/// Entry point of the comprof command line. Usage errors (including unknown
/// flags) print the usage text and return 2; runtime failures print a
/// one-line cause and return 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace comprof::tools
