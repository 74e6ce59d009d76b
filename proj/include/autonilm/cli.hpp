#pragma once

#include <iosfwd>

namespace autonilm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point of the `autonilm` tool. Subcommands: search, evaluate,
/// benchmark, synth, validate, space.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace autonilm
