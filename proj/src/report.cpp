// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hoprouter::report {

ReportRow make_row(std::string dataset, std::string strategy, double mean_quality, double mean_cost, double alpha,
                   std::size_t n_examples) {
  ReportRow r;
  r.dataset = std::move(dataset);
  r.strategy = std::move(strategy);
  r.mean_quality = mean_quality;
  r.mean_cost = mean_cost;
  r.alpha = alpha;
  r.net_reward = mean_quality - alpha * mean_cost;
  r.n_examples = n_examples;
  return r;
}

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;

template <typename RunOne>
Aggregate evaluate(const std::vector<data::Example>& examples, int repeats, std::uint64_t seed, RunOne&& run_one) {
  Aggregate agg;
  double q = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (int k = 0; k < repeats; ++k) {
      Rng rng(derive_seed(seed, {kEvalStream, i, static_cast<std::uint64_t>(k)}));
      const Trajectory t = run_one(examples[i], rng);
      q += t.final_quality.value_or(0.0);
      c += t.final_state.cum_cost;
      ++agg.episodes;
    }
  }
  if (agg.episodes > 0) {
    agg.mean_quality = q / static_cast<double>(agg.episodes);
    agg.mean_cost = c / static_cast<double>(agg.episodes);
  }
  return agg;
}

}  // namespace

Aggregate evaluate_router(const policy::PolicyParameters& params, const Environment& env,
                          const encoder::EncoderConfig& enc, const std::vector<data::Example>& examples,
                          int repeats, std::uint64_t seed) {
  return evaluate(examples, repeats, seed, [&](const data::Example& ex, Rng& rng) {
    return run_episode(ex.query, &ex.answers, params, env, enc, rng, policy::SampleMode::kGreedy);
  });
}

Aggregate evaluate_static(std::size_t model_index, const Environment& env, const std::vector<data::Example>& examples,
                          int repeats, std::uint64_t seed) {
  return evaluate(examples, repeats, seed, [&](const data::Example& ex, Rng& rng) {
    Trajectory traj;
    RoutingState state = init_state(ex.query);
    for (;;) {
      StepResult step = env.step(state, RoutingAction{model_index, false}, &ex.answers, rng);
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
  });
}

nlohmann::json to_json(const ReportRow& r) {
  return {{"dataset", r.dataset},
          {"strategy", r.strategy},
          {"mean_quality", r.mean_quality},
          {"mean_cost", r.mean_cost},
          {"mean_cost_per_1k_tokens", r.mean_cost_per_1k()},
          {"alpha", r.alpha},
          {"net_reward", r.net_reward},
          {"n_examples", r.n_examples}};
}

nlohmann::json rows_to_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

std::string format_table(const std::vector<ReportRow>& rows) {
  std::size_t w_data = 7;
  std::size_t w_strat = 8;
  for (const auto& r : rows) {
    w_data = std::max(w_data, r.dataset.size());
    w_strat = std::max(w_strat, r.strategy.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>10}  {:>12}  {:>14}  {:>12}  {:>6}\n", "dataset", w_data,
                                "strategy", w_strat, "quality", "cost", "cost_per_1k", "net_reward", "n");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:<{}}  {:>10.6f}  {:>12.6f}  {:>14.4f}  {:>12.7f}  {:>6}\n", r.dataset, w_data,
                       r.strategy, w_strat, r.mean_quality, r.mean_cost, r.mean_cost_per_1k(), r.net_reward,
                       r.n_examples);
  }
  return out;
}

}  // namespace hoprouter::report
