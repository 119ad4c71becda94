#pragma once

#include <string>
#include <vector>

namespace simulmt {

/// Entry point behind the simulmt binary. Returns 0 on success, 1 on a
/// runtime error (after printing one "error: ..." line to stderr), 2 on
/// usage errors.
int cli_main(const std::vector<std::string>& args);

}  // namespace simulmt
