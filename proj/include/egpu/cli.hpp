#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace egpu::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kAssembly = 2,
  kTrap = 3,
};

/// Entry point behind the `egpu` executable. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace egpu::cli
