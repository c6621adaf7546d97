#pragma once

#include <iosfwd>

namespace dspl {

// Entry point of the `dspl` tool. Exit codes: 0 success, 1 error or failed
// check, 2 oracle unavailable.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dspl
