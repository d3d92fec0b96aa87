#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ecgsynth/error.hpp"

namespace ecgsynth {

// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitInput = 2,
  kExitTraining = 3,
  kExitSynthesis = 4,
};

int exit_code_for(ErrorCode code);

// Runs one invocation; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecgsynth
