// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_SIMULATE_HPP_
#define HOPROUTER_SIMULATE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoprouter/backends.hpp"
#include "hoprouter/config.hpp"
#include "hoprouter/core.hpp"
#include "hoprouter/data.hpp"
#include "hoprouter/ppo.hpp"
#include "hoprouter/report.hpp"

namespace hoprouter::simulate {

struct TaskSpec {
  std::string name;
  int count = 300;
  std::vector<std::string> keywords;  // vocabulary synthetic queries are drawn from
};

/// A self-contained routing problem over simulated specialists.
struct Scenario {
  std::vector<backends::ModelSpec> specialists;
  std::vector<TaskSpec> tasks;
  EpisodeConfig episode;
  RewardConfig reward;
  ppo::PpoConfig ppo;
  encoder::EncoderConfig encoder;
  int hidden = 64;
  std::size_t cap = 300;
  double train_fraction = 0.7;
  int eval_repeats = 10;
};

/// Three specialists (math-strong, code-strong, middling generalist), two
/// tasks, two hops, alpha 0.005, default PPO constants.
Scenario default_scenario();
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& s);

/// One dataset per task, deterministic in `seed`. Reference answers share no
/// token with queries, fillers or distractors.
std::vector<std::vector<data::Example>> synthesize_datasets(const Scenario& s, std::uint64_t seed);

/// Per-dataset cap-and-split; the train parts are concatenated in dataset order.
struct PreparedData {
  std::vector<data::Example> train;
  std::vector<std::vector<data::Example>> tests;
  std::vector<data::Example> all_test;
};
PreparedData prepare_splits(const std::vector<std::vector<data::Example>>& datasets, std::size_t cap,
                            double train_fraction, std::uint64_t seed);

std::shared_ptr<backends::AnswerKey> build_answer_key(const std::vector<std::vector<data::Example>>& datasets);

struct StaticSequenceValue {
  std::vector<std::size_t> models;
  double expected_quality = 0.0;
  double expected_cost = 0.0;
  double expected_net = 0.0;
};

/// Exact expected quality, cost and net reward of every fixed model sequence
/// of length max_hops (M^L of them, lexicographic order), averaged over
/// `examples`. Computed in closed form from the specialist profiles by
/// enumerating per-hop outcomes; no episodes are run.
std::vector<StaticSequenceValue> enumerate_static_sequences(const std::vector<backends::ModelSpec>& pool,
                                                            const EpisodeConfig& episode, double alpha,
                                                            const std::vector<data::Example>& examples);

struct SimulationSummary {
  report::Aggregate router;
  double router_net = 0.0;
  std::vector<StaticSequenceValue> sequences;
  std::size_t best_sequence = 0;
  std::size_t best_single = 0;  // index into `sequences`
  std::vector<ppo::MetricsRow> training;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;

  double margin_vs_best_single() const;
  double relative_margin_vs_best_single() const;
  nlohmann::json to_json(const Scenario& s, std::uint64_t seed) const;
};

SimulationSummary run_simulation(const Scenario& s, std::uint64_t seed);

/// The train-command equivalent of a scenario: the pool, episode, PPO and
/// encoder settings plus one dataset reference per task.
config::RunConfig scenario_run_config(const Scenario& s, std::uint64_t seed,
                                      const std::vector<std::string>& dataset_paths);

/// Writes <dir>/<task>.jsonl for every task and <dir>/config.json.
void write_scenario_files(const Scenario& s, std::uint64_t seed, const std::string& dir);

}  // namespace hoprouter::simulate

#endif  // HOPROUTER_SIMULATE_HPP_
