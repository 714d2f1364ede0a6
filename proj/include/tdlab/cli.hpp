#pragma once

#include <string>
#include <vector>

namespace tdlab::cli {

// Process exit codes shared by every subcommand.
constexpr int kExitOk = 0;          // success, all asserted properties held
constexpr int kExitUsage = 2;       // bad flags, malformed inputs, domain errors
constexpr int kExitDiverged = 3;    // a numerical run left the finite regime
constexpr int kExitViolations = 4;  // theory run found inequality violations

// Library version stamped into every manifest.
extern const char* const kVersion;

// Environment variable consulted for the default --out directory.
extern const char* const kOutDirEnvVar;

// Entry point behind the `tdlab` binary: parses argv, dispatches to one of
// the subcommands (theory | solve | learn | sweep | stats) and returns the
// process exit code. Every run writes manifest.json (resolved configuration,
// version, seed) into the output directory before doing any work, and all
// outputs are pure functions of (flags, seed): reruns are byte-identical.
int run(int argc, const char* const* argv);

// Test-friendly wrapper: `args` are the tokens after the program name.
int run(const std::vector<std::string>& args);

}  // namespace tdlab::cli
