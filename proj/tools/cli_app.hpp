#pragma once

#include <string>
#include <vector>

namespace hsicd {

// Entry point behind the `hsicd` executable; args[0] is the program name.
// Returns the process exit code: 0 on success, 1 on runtime failure, 2 on
// invalid usage.
int run_cli(const std::vector<std::string>& args);

}  // namespace hsicd
