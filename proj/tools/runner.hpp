#pragma once

#include <ostream>
#include <string>

namespace wnlab::cli {

inline constexpr const char* kArtifactVersion = "wnlab 1.0.0";

enum ExitCode { kExitPass = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs the experiment named in the config file. Writes manifest.json (first
/// with status "running", then finalized), reports.csv and reports.json into
/// the output directory. Diagnostics go to `err`, the summary to `out`.
int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err);

/// Experiment names, the identity each verifies, and their keys.
void list_experiments(std::ostream& out);

/// Kernel accuracy plus serialization round trips; one line per check.
int selftest(std::ostream& out);

}  // namespace wnlab::cli
