#pragma once

#include <iosfwd>

namespace diana {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitInvalid = 2,  // bad arguments, scenario or weights
};

/// Entry point of the `diana` tool, callable from tests.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diana
