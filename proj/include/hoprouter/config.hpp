// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_CONFIG_HPP_
#define HOPROUTER_CONFIG_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "hoprouter/backends.hpp"
#include "hoprouter/core.hpp"
#include "hoprouter/encoder.hpp"
#include "hoprouter/ppo.hpp"

namespace hoprouter::config {

struct DataConfig {
  std::vector<std::string> datasets;  // JSONL files; relative paths resolve against the config file
  std::size_t cap = 300;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 42;
};

/// Everything a train/eval/route run needs.
struct RunConfig {
  std::vector<backends::ModelSpec> pool;
  EpisodeConfig episode;
  RewardConfig reward;
  ppo::PpoConfig ppo;
  encoder::EncoderConfig encoder;
  int hidden = 64;
  DataConfig data;
  std::string output_dir = "out";

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  policy::PolicyShape policy_shape() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the
/// offending key path.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const backends::ModelSpec& spec);
backends::ModelSpec parse_model_spec(const nlohmann::json& doc, const std::string& where);

ppo::PpoConfig parse_ppo(const nlohmann::json& doc, const std::string& where, ppo::PpoConfig base = {});
nlohmann::json to_json(const ppo::PpoConfig& cfg);
EpisodeConfig parse_episode(const nlohmann::json& doc, const std::string& where);
nlohmann::json to_json(const EpisodeConfig& cfg);
encoder::EncoderConfig parse_encoder(const nlohmann::json& doc, const std::string& where);
nlohmann::json to_json(const encoder::EncoderConfig& cfg);

}  // namespace hoprouter::config

#endif  // HOPROUTER_CONFIG_HPP_
