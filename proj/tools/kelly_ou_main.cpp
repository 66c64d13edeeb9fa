#include <iostream>

#include "CLI11.hpp"
#include "kelly_ou/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Kelly fractions and wealth simulation for Ornstein-Uhlenbeck log-price markets"};
  kelly_ou::CliOptions options;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  auto* config_opt = app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out, "output directory (fallback: $KELLY_OU_OUT, then .)");
  auto* threads_opt = app.add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);

  app.require_subcommand(1);
  for (const auto& name : kelly_ou::command_names()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kelly_ou::kExitConfig;
  }

  options.command = app.get_subcommands().front()->get_name();
  if (*config_opt) options.config_path = config;
  if (*seed_opt) options.seed = seed;
  if (*out_opt) options.out_dir = out;
  if (*threads_opt) options.threads = threads;
  return kelly_ou::run_command(options, std::cout, std::cerr);
}
