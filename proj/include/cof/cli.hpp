#pragma once

#include <string>
#include <vector>

namespace cof {

// Runs one CLI invocation. args excludes the program name. Returns the
// process exit code: 0 success, 1 usage error, 2 data/format error.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace cof
