#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dds {

// Exit codes: 0 success, 2 bad spec (arguments, priors, unreadable inputs), 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dds
