#pragma once

#include <string>
#include <vector>

namespace aev {

/// Entry point behind the `aev` binary, separated so tests can drive the
/// command surface directly. `args` excludes the program name. Returns the
/// process exit status (0 on success, categorized non-zero otherwise).
int run_cli(const std::vector<std::string>& args);

}  // namespace aev
