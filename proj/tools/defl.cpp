// defl: delay-efficient federated learning planner and simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 planner/model error,
// 4 simulation divergence.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "defl/commands.hpp"
#include "defl/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPlanner = 3;
constexpr int kExitDiverged = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-efficient federated learning planner and simulator"};
  app.require_subcommand(1);

  std::string config_path;
  defl::CommandOptions options;
  std::uint64_t seed = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")
        ->required();
    sub->add_option("--seed", seed, "override the configured base seed")
        ->trigger_on_parse()
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", options.out_path, "write machine-readable output here");
  };

  CLI::App* plan = app.add_subcommand("plan", "closed-form and oracle plans");
  add_common(plan);

  CLI::App* simulate = app.add_subcommand("simulate", "one training run, CSV trace");
  add_common(simulate);

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep, plot-ready CSV");
  add_common(sweep);
  sweep->add_option("--axis", options.axis, "sweep axis: epsilon | b | theta")
      ->required();
  sweep->add_option("--values", options.values, "axis values")->required();
  sweep->add_flag("--simulate", options.simulate,
                  "also run a simulation per sweep point");

  CLI::App* compare = app.add_subcommand("compare", "plan vs fixed baselines");
  add_common(compare);
  compare->add_flag("--simulate", options.simulate,
                    "also measure simulated time-to-target per arm");

  CLI11_PARSE(app, argc, argv);
  if (seed_set) options.seed = seed;

  try {
    const defl::ExperimentConfig config = defl::load_config(config_path);
    if (plan->parsed()) defl::cmd_plan(config, options, std::cout);
    if (simulate->parsed()) defl::cmd_simulate(config, options, std::cout);
    if (sweep->parsed()) defl::cmd_sweep(config, options, std::cout);
    if (compare->parsed()) defl::cmd_compare(config, options, std::cout);
  } catch (const defl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const defl::DivergedError& e) {
    std::cerr << "simulation diverged at round " << e.round() << ": " << e.what()
              << "\n";
    return kExitDiverged;
  } catch (const defl::DomainError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitPlanner;
  } catch (const defl::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitPlanner;
  }
  return 0;
}
