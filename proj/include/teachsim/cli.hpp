#pragma once

#include <ostream>
#include <string>

namespace teachsim {

/// Exit codes: 0 success, 2 usage or config error, 3 runtime error, 4 I/O error.
int exit_code_for(const std::string& error_code);

/// Entry point of the `teachsim` tool. Failures print one line
/// `error[CODE]: message` to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace teachsim
