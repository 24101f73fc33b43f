#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nlos::cli {

/// Runs one CLI invocation. args[0] is the program name. Returns the process
/// exit code: 0 success, 1 domain error, 2 usage error. Failures print exactly
/// one "error: <Category>: <message>" line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlos::cli
