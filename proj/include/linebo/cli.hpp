#pragma once

#include <iosfwd>

namespace linebo {

/// Entry point of the `linebo` command. Exit codes: 0 success, 1 runtime
/// failure, 2 usage or config error, 130 interrupted.
int cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace linebo
