#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gsn {

// Full command-line surface: gen-synth, train, eval, predict, inspect.
// Returns the process exit code: 0 on success, 2 for configuration or
// ingestion problems, 1 for any other failure. Errors print one line
// "error:<category>: <message>" on err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsn
