#pragma once

#include <string>
#include <vector>

namespace vus {

/// Entry point used by the vus binary; exposed for tests.
/// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace vus
