#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hopper/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hopper: hybrid MPC hopping-robot simulator"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run a scenario JSON file");
  std::string scenario_path;
  hopper::RunnerOptions opt;
  double duration = -1.0;
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out-dir", opt.out_dir, "Directory for trace/summary outputs");
  run->add_option("--duration-override", duration, "Replace the scenario duration (s)");
  run->add_option("--log-every", opt.log_every, "Write every n-th trace sample")
      ->check(CLI::PositiveNumber);
  run->add_flag("--deterministic", opt.force_deterministic,
                "Force synchronous MPC interleaving");
  run->add_flag("--realtime-sim", opt.realtime,
                "Solve MPC on an asynchronous worker thread");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  if (duration > 0.0) opt.duration_override = duration;
  return hopper::run_scenario_files(scenario_path, opt);
}
