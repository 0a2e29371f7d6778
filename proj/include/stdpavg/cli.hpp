#pragma once

namespace stdpavg {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitNumeric = 3,
  kExitBudget = 4,
};

// Full command line front end; returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace stdpavg
