#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gpath::cli {

// Entry point behind the `gpath` binary. args[0] is the program name.
// Returns 0 on success; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpath::cli
