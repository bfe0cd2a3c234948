// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_COMMANDS_HPP_
#define HOPROUTER_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace hoprouter::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitRuntimeError = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Trains from a run config; writes <output_dir>/policy.ckpt and
/// <output_dir>/train_metrics.csv.
int cmd_train(const std::string& config_path, bool deterministic, Streams io);

/// Greedy routing plus one static baseline per model over each dataset's
/// held-out split; writes <output_dir>/eval_report.{json,txt}.
int cmd_eval(const std::string& config_path, const std::string& checkpoint_path, bool deterministic, Streams io);

/// Routes one query greedily and prints the per-hop trace as JSON. The run
/// config stored in the checkpoint is used unless `config_path` is given.
int cmd_route(const std::string& checkpoint_path, const std::string& query,
              const std::optional<std::string>& config_path, Streams io);

struct SimulateOptions {
  std::uint64_t seed = 42;
  std::optional<std::string> scenario_path;
  std::optional<std::string> output_path;       // summary JSON file
  std::optional<std::string> write_config_dir;  // emit datasets + train config instead of running
  bool deterministic = false;
};

int cmd_simulate(const SimulateOptions& opts, Streams io);

}  // namespace hoprouter::commands

#endif  // HOPROUTER_COMMANDS_HPP_
