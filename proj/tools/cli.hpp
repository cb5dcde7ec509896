#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace priormap::cli {

// Runs one command. Returns 0 on success, 2 on a usage error (the message
// names the flag), 1 on any runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace priormap::cli
