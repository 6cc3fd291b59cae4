#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atlas::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kInputError = 3,
  kAnnotatorError = 4,
  kInternalError = 5,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace atlas::cli
