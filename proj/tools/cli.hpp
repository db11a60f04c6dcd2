#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ggnn::cli {

/// Runs one command line (without the program name). Reports go to `out`,
/// error lines (JSON objects with an "error" field) to `err`.
/// Returns 0 on success, 1 on a runtime failure, 2 on a usage or config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "a:b:step", inclusive of b up to rounding. Throws ConfigError on bad input.
std::vector<double> parse_sweep(const std::string& spec);

}  // namespace ggnn::cli
