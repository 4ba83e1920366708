#pragma once

#include <string>
#include <vector>

namespace topobo::cli {

// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error, 5 resource error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace topobo::cli
