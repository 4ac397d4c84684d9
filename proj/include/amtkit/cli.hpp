#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace amtkit {

/// Command-line entry point (argv without the program name).
/// Exit code 0 on success, 1 with a one-line diagnostic on any module error,
/// 2 on usage errors. `validate` exits 0 iff the stream is clean.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace amtkit
