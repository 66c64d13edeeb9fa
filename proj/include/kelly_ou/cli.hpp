#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kelly_ou {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitAcceptance = 4,
};

struct CliOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand and maps failures onto the exit-code contract.
/// Timing goes to `err` only, so files and `out` are reproducible.
int run_command(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace kelly_ou
