#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace statact::cli {

// Full command surface of the tool. Returns the process exit code:
//   0 success, 1 validation failure, 2 budget/resolution error,
//   3 malformed input. All output goes to the given streams so tests can
//   drive commands in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}
