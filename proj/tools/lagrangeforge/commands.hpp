#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lagrangeforge::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitVerificationFailed = 2;
inline constexpr int kExitInapplicable = 3;
inline constexpr int kExitInputError = 4;

struct CommandOptions {
  std::string command;  // classify | build | verify | integrate | compare | demo
  std::string spec;     // file path (or preset name for demo)
  std::optional<std::string> out_dir;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
};

// Runs one command, writes report.json, timing.json and the CSV artifacts,
// prints a short summary to stdout, and returns the process exit code.
int run_command(const CommandOptions& options);

}  // namespace lagrangeforge::cli
