#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kzsparse::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on configuration errors or bad
/// flags, 2 when a run fails numerically.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kzsparse::cli
