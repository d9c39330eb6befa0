#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rankml {

// Dispatches one command-line invocation. `args` excludes the program name.
// Machine-readable JSON goes to `out`, diagnostics to `err`. Returns 0 on
// success, 1 on usage errors, 2 on data/model errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rankml
