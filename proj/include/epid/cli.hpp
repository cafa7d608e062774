#pragma once

#include <iosfwd>

namespace epid {

// Exit codes: 0 success, 1 validation or usage error, 2 runtime failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace epid
