// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_CORE_HPP_
#define HOPROUTER_CORE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoprouter/backends.hpp"
#include "hoprouter/encoder.hpp"
#include "hoprouter/policy.hpp"
#include "hoprouter/rng.hpp"
#include "hoprouter/routing_state.hpp"

namespace hoprouter {

inline constexpr std::string_view kLayer0Prompt =
    "Describe the problem in detail, then plan how you would solve it. Analyze the problem step by step, "
    "identifying key constraints and requirements.";
inline constexpr std::string_view kLayer1Prompt =
    "Using the previous analysis and plan, verify if the approach is correct and solve the problem methodically. "
    "Ensure completeness and correctness in your solution.";

struct RewardConfig {
  double alpha = 0.005;
};

struct EpisodeConfig {
  int max_hops = 2;
  bool halting_enabled = false;
  std::vector<std::string> layer_prompts{std::string(kLayer0Prompt), std::string(kLayer1Prompt)};

  /// Throws ConfigError unless max_hops >= 1 and there is one prompt per hop.
  void validate() const;
};

struct Transition {
  RoutingState state;
  RoutingAction action;
  std::size_t action_index = 0;  // flat index into the policy's action head
  std::string model_name;
  std::string response;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  double step_cost = 0.0;
  double reward = 0.0;
  bool done = false;
  double log_prob = 0.0;
  double value_estimate = 0.0;
  policy::PolicyInput policy_input;  // what the network saw at this hop
};

struct Trajectory {
  std::vector<Transition> transitions;
  std::optional<double> final_quality;  // absent when no reference answers were given
  double final_reward = 0.0;
  RoutingState final_state;
};

struct StepResult {
  RoutingState next;
  double reward = 0.0;
  bool done = false;
  std::optional<double> quality;
  Transition transition;
};

/// Throws EmptyQuery when `query` is blank.
RoutingState init_state(std::string_view query);

/// quality - alpha * cum_cost. Throws DomainError outside the valid domain.
double terminal_reward(double quality, double cum_cost, double alpha);

/// Backend input for a hop: the layer instruction, a blank line, then the context.
std::string compose_input(std::string_view layer_prompt, std::string_view context);

/// Routing environment over a fixed model pool. Holds no mutable state, so one
/// instance may serve concurrent episodes.
class Environment {
 public:
  Environment(const backends::ModelPool& pool, RewardConfig reward, EpisodeConfig episode);

  /// Policy head width: M, or 2M when halting is enabled (index >= M halts).
  std::size_t num_actions() const noexcept;
  RoutingAction decode_action(std::size_t index) const;
  std::size_t encode_action(const RoutingAction& action) const;

  /// One hop. `gold` may be null; in training mode a terminal step without
  /// reference answers raises MissingGold.
  StepResult step(const RoutingState& state, const RoutingAction& action, const std::vector<std::string>* gold,
                  Rng& rng, bool training = false) const;

  const backends::ModelPool& pool() const noexcept { return *pool_; }
  const RewardConfig& reward_config() const noexcept { return reward_; }
  const EpisodeConfig& episode_config() const noexcept { return episode_; }

 private:
  const backends::ModelPool* pool_;
  RewardConfig reward_;
  EpisodeConfig episode_;
};

/// Runs one episode under `params`. Throws NonFiniteValue if the network emits
/// non-finite outputs.
Trajectory run_episode(std::string_view query, const std::vector<std::string>* gold,
                       const policy::PolicyParameters& params, const Environment& env,
                       const encoder::EncoderConfig& enc, Rng& rng, policy::SampleMode mode, bool training = false);

}  // namespace hoprouter

#endif  // HOPROUTER_CORE_HPP_
