// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/core.hpp"

#include <cmath>

#include "hoprouter/error.hpp"
#include "hoprouter/evalkit.hpp"

namespace hoprouter {

void EpisodeConfig::validate() const {
  if (max_hops < 1) throw ConfigError("max_hops must be >= 1");
  if (layer_prompts.size() != static_cast<std::size_t>(max_hops))
    throw ConfigError("need exactly one layer prompt per hop (" + std::to_string(max_hops) + "), got " +
                      std::to_string(layer_prompts.size()));
}

RoutingState init_state(std::string_view query) {
  if (query.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos) throw EmptyQuery("query is empty");
  return {std::string(query), 0, 0.0};
}

double terminal_reward(double quality, double cum_cost, double alpha) {
  if (!(quality >= 0.0 && quality <= 1.0)) throw DomainError("quality outside [0,1]");
  if (!(cum_cost >= 0.0)) throw DomainError("cumulative cost must be non-negative");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be non-negative");
  return quality - alpha * cum_cost;
}

std::string compose_input(std::string_view layer_prompt, std::string_view context) {
  if (layer_prompt.empty()) return std::string(context);
  std::string out;
  out.reserve(layer_prompt.size() + 2 + context.size());
  out.append(layer_prompt).append("\n\n").append(context);
  return out;
}

Environment::Environment(const backends::ModelPool& pool, RewardConfig reward, EpisodeConfig episode)
    : pool_(&pool), reward_(reward), episode_(std::move(episode)) {
  episode_.validate();
  if (!(reward_.alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (pool.size() == 0) throw ConfigError("model pool is empty");
}

std::size_t Environment::num_actions() const noexcept {
  return episode_.halting_enabled ? 2 * pool_->size() : pool_->size();
}

RoutingAction Environment::decode_action(std::size_t index) const {
  if (index >= num_actions()) throw InvalidAction("action index " + std::to_string(index) + " out of range");
  const std::size_t m = pool_->size();
  return {index % m, index >= m};
}

std::size_t Environment::encode_action(const RoutingAction& action) const {
  if (action.model_index >= pool_->size()) throw InvalidAction("model index out of range");
  return action.model_index + (episode_.halting_enabled && action.halt ? pool_->size() : 0);
}

StepResult Environment::step(const RoutingState& state, const RoutingAction& action,
                             const std::vector<std::string>* gold, Rng& rng, bool training) const {
  if (state.depth < 0 || state.depth >= episode_.max_hops)
    throw DepthOutOfRange("step requested at depth " + std::to_string(state.depth));
  if (action.model_index >= pool_->size())
    throw InvalidAction("model index " + std::to_string(action.model_index) + " outside pool of " +
                        std::to_string(pool_->size()));

  const auto& spec = pool_->spec(action.model_index);
  const std::string input = compose_input(episode_.layer_prompts[static_cast<std::size_t>(state.depth)], state.context);
  backends::GenResult gen = pool_->backend(action.model_index).generate(input, rng);
  const double delta = backends::estimate_cost(spec, gen.tokens_in, gen.tokens_out);

  StepResult r;
  r.next.context = state.context;
  r.next.context.push_back('\n');
  r.next.context += gen.text;
  r.next.depth = state.depth + 1;
  r.next.cum_cost = state.cum_cost + delta;
  r.done = (episode_.halting_enabled && action.halt) || r.next.depth == episode_.max_hops;

  if (r.done) {
    if (gold != nullptr) {
      r.quality = evalkit::f1_score(r.next.context, *gold).value;
      r.reward = terminal_reward(*r.quality, r.next.cum_cost, reward_.alpha);
    } else if (training) {
      throw MissingGold("episode finished in training mode without reference answers");
    }
  }

  Transition& t = r.transition;
  t.state = state;
  t.action = action;
  t.model_name = spec.name;
  t.response = std::move(gen.text);
  t.tokens_in = gen.tokens_in;
  t.tokens_out = gen.tokens_out;
  t.step_cost = delta;
  t.reward = r.reward;
  t.done = r.done;
  return r;
}

Trajectory run_episode(std::string_view query, const std::vector<std::string>* gold,
                       const policy::PolicyParameters& params, const Environment& env,
                       const encoder::EncoderConfig& enc, Rng& rng, policy::SampleMode mode, bool training) {
  const auto shape = params.shape();
  if (static_cast<std::size_t>(shape.num_actions) != env.num_actions() || shape.embed_dim != enc.embed_dim ||
      shape.num_stages != env.episode_config().max_hops)
    throw ShapeMismatch("policy dimensions do not match pool, encoder or hop count");

  Trajectory traj;
  RoutingState state = init_state(query);
  for (;;) {
    policy::PolicyInput in{encoder::embed_text(state.context, enc), state.depth, state.cum_cost * enc.cost_scale};
    const policy::PolicyOutput out = policy::forward(params, in);
    if (!out.logits.allFinite() || !std::isfinite(out.value))
      throw NonFiniteValue("policy produced non-finite output at hop " + std::to_string(state.depth));

    const auto dist = policy::action_distribution(out.logits);
    const std::size_t a = policy::sample(dist, rng, mode);
    const auto lpe = policy::log_prob_entropy(out.logits, a);

    StepResult step;
    try {
      step = env.step(state, env.decode_action(a), gold, rng, training);
    } catch (const BackendFailure& e) {
      throw BackendFailure(e.cause(), "hop " + std::to_string(state.depth) + ": " + e.what(), e.http_status());
    }
    step.transition.action_index = a;
    step.transition.log_prob = lpe.log_prob;
    step.transition.value_estimate = out.value;
    step.transition.policy_input = std::move(in);
    traj.transitions.push_back(std::move(step.transition));
    state = std::move(step.next);
    if (step.done) {
      traj.final_quality = step.quality;
      traj.final_reward = step.reward;
      break;
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace hoprouter
