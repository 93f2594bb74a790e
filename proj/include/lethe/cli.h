#ifndef LETHE_CLI_H_
#define LETHE_CLI_H_

namespace lethe {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
};

// Entry point for the `lethe` tool. Subcommands: tune, lr-curve,
// hazard-curve, ccdf-curve, simulate, fft-table, utility, store serve.
int RunCli(int argc, const char* const* argv);

}  // namespace lethe

#endif  // LETHE_CLI_H_
