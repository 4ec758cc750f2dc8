#include <iostream>

#include <CLI11.hpp>

#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"White-noise Euler laboratory: point-vortex ensembles, white noise and patch solutions"};
  app.require_subcommand(1);
  std::string config;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config, "config file")->required();
  auto* list = app.add_subcommand("list", "list experiments and their config keys");
  auto* self = app.add_subcommand("selftest", "kernel accuracy and round-trip checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wnlab::cli::kExitUsage;
  }
  if (*run) return wnlab::cli::run_experiment(config, std::cout, std::cerr);
  if (*list) {
    wnlab::cli::list_experiments(std::cout);
    return 0;
  }
  if (*self) return wnlab::cli::selftest(std::cout);
  return wnlab::cli::kExitUsage;
}
