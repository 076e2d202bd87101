#pragma once

#include <iosfwd>

namespace ucpo {

// Entry point behind the `ucpo` binary, parameterized over streams so tests
// can drive it end to end. Subcommands: sweep, gamma-range, train, advantage,
// eval-metrics. Returns the process exit status.
int cli_main(int argc, const char* const* argv, std::istream& in,
             std::ostream& out, std::ostream& err);

}  // namespace ucpo
