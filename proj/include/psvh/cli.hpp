#pragma once

#include <string>
#include <vector>

namespace psvh {

// Command-line front end. `args` excludes the program name. Exit codes:
//   0  success
//   2  usage or configuration error
//   3  I/O error
//   4  numerical tolerance exceeded
int run_cli(const std::vector<std::string>& args);

}  // namespace psvh
