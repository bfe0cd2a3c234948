// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hoprouter/commands.hpp"

int main(int argc, char** argv) {
  using namespace hoprouter::commands;
  CLI::App app{"hoprouter: cost-aware multi-hop model routing trained with PPO"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string query;
  std::string route_config;
  bool deterministic = false;
  SimulateOptions sim;
  std::string scenario_path;
  std::string sim_out;
  std::string write_config;

  auto* train = app.add_subcommand("train", "train a routing policy");
  train->add_option("--config", config_path, "run config (JSON)")->required();
  train->add_flag("--deterministic", deterministic, "single-threaded rollouts");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the held-out splits");
  eval->add_option("--config", config_path, "run config (JSON)")->required();
  eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();
  eval->add_flag("--deterministic", deterministic, "single-threaded evaluation");

  auto* route = app.add_subcommand("route", "route one query and print the hop trace");
  route->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();
  route->add_option("--query", query, "query text")->required();
  route->add_option("--config", route_config, "override the run config stored in the checkpoint");
  route->add_flag("--deterministic", deterministic, "accepted for uniformity; routing is single-threaded");

  auto* simulate = app.add_subcommand("simulate", "train on a simulated specialist pool and compare to static oracles");
  simulate->add_option("--seed", sim.seed, "seed")->default_val(42);
  simulate->add_option("--scenario", scenario_path, "scenario file (JSON); defaults to the built-in scenario");
  simulate->add_option("--out", sim_out, "also write the summary JSON here");
  simulate->add_option("--write-config", write_config, "write scenario datasets and a train config to this directory");
  simulate->add_flag("--deterministic", deterministic, "single-threaded rollouts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  Streams io{std::cout, std::cerr};
  if (*train) return cmd_train(config_path, deterministic, io);
  if (*eval) return cmd_eval(config_path, checkpoint_path, deterministic, io);
  if (*route) {
    return cmd_route(checkpoint_path, query, route_config.empty() ? std::nullopt : std::optional(route_config), io);
  }
  if (!scenario_path.empty()) sim.scenario_path = scenario_path;
  if (!sim_out.empty()) sim.output_path = sim_out;
  if (!write_config.empty()) sim.write_config_dir = write_config;
  sim.deterministic = deterministic;
  return cmd_simulate(sim, io);
}
