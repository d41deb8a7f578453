#ifndef QUAYSIM_TOOLS_CLI_H_
#define QUAYSIM_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace quaysim::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kInternal = 3,
};

// Entry point of the quaysim binary; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quaysim::cli

#endif  // QUAYSIM_TOOLS_CLI_H_
