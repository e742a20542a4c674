#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace forcesolve {

// Entry point of the `forcesolve` tool. Exit codes: 0 success, 1 runtime
// failure (one JSON error line on `err`), 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

// Same, with argv[0] supplied internally.
int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

}  // namespace forcesolve
