// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hoprouter/core.hpp"
#include "hoprouter/error.hpp"
#include "hoprouter/simulate.hpp"

using namespace hoprouter;

namespace {

backends::ModelSpec replay(std::string name, double rate, std::map<std::string, std::string, std::less<>> r) {
  return {std::move(name), rate, backends::ReplayScript{std::move(r)}};
}

EpisodeConfig bare_episode(int hops = 2, bool halting = false) {
  EpisodeConfig e;
  e.max_hops = hops;
  e.halting_enabled = halting;
  e.layer_prompts.assign(static_cast<std::size_t>(hops), "");
  return e;
}

}  // namespace

TEST_CASE("init_state") {
  const auto s = init_state("What is 2+2?");
  CHECK(s.context == "What is 2+2?");
  CHECK(s.depth == 0);
  CHECK(s.cum_cost == 0.0);
  CHECK_THROWS_AS(init_state(""), EmptyQuery);
  CHECK_THROWS_AS(init_state("  \n\t"), EmptyQuery);
}

TEST_CASE("terminal_reward") {
  CHECK(terminal_reward(0.139, 0.0163, 0.005) == doctest::Approx(0.1389185).epsilon(1e-12));
  CHECK(terminal_reward(1.0, 0.0, 0.005) == 1.0);
  CHECK(terminal_reward(0.5, 2.0, 0.0) == 0.5);
  CHECK_THROWS_AS(terminal_reward(1.1, 0.0, 0.005), DomainError);
  CHECK_THROWS_AS(terminal_reward(0.5, -1.0, 0.005), DomainError);
  CHECK_THROWS_AS(terminal_reward(0.5, 0.0, -0.1), DomainError);
  CHECK_THROWS_AS(terminal_reward(std::nan(""), 0.0, 0.005), DomainError);
}

TEST_CASE("compose_input") {
  CHECK(compose_input("Plan.", "ctx") == "Plan.\n\nctx");
  CHECK(compose_input("", "ctx") == "ctx");
}

TEST_CASE("episode config validation") {
  EpisodeConfig e;
  CHECK_NOTHROW(e.validate());
  e.max_hops = 3;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e.max_hops = 0;
  e.layer_prompts.clear();
  CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("two-hop step sequence with replayed responses") {
  backends::ModelPool pool({replay("m", 0.002,
                                   {{"What is 2 + 2?", "4"}, {"What is 2 + 2?\n4", "x y z"}})},
                           nullptr);
  Environment env(pool, {0.005}, bare_episode());
  Rng rng(0);
  const std::vector<std::string> gold{"What is 2 + 2?\n4\nx y z"};

  const auto s0 = init_state("What is 2 + 2?");
  const auto r1 = env.step(s0, {0, false}, &gold, rng, true);
  CHECK(r1.next.context == "What is 2 + 2?\n4");
  CHECK(r1.next.depth == 1);
  CHECK(r1.next.cum_cost == doctest::Approx(0.012).epsilon(1e-15));
  CHECK_FALSE(r1.done);
  CHECK(r1.reward == 0.0);
  CHECK_FALSE(r1.quality.has_value());
  CHECK(r1.transition.tokens_in == 5);
  CHECK(r1.transition.tokens_out == 1);

  const auto r2 = env.step(r1.next, {0, false}, &gold, rng, true);
  CHECK(r2.done);
  CHECK(r2.transition.tokens_in == 6);
  CHECK(r2.transition.tokens_out == 3);
  CHECK(r2.transition.step_cost == doctest::Approx(0.018).epsilon(1e-15));
  CHECK(r2.next.cum_cost == doctest::Approx(0.030).epsilon(1e-15));
  REQUIRE(r2.quality.has_value());
  CHECK(*r2.quality == 1.0);
  CHECK(r2.reward == doctest::Approx(0.99985).epsilon(1e-14));

  CHECK_THROWS_AS(env.step(r2.next, {0, false}, &gold, rng), DepthOutOfRange);
  CHECK_THROWS_AS(env.step(s0, {1, false}, &gold, rng), InvalidAction);
}

TEST_CASE("layer prompts reach the backend but not the context") {
  EpisodeConfig e = bare_episode(1);
  e.layer_prompts[0] = "Think.";
  backends::ModelPool pool({replay("m", 0.001, {{"Think.\n\nq", "a"}})}, nullptr);
  Environment env(pool, {0.005}, e);
  Rng rng(0);
  const auto r = env.step(init_state("q"), {0, false}, nullptr, rng);
  CHECK(r.next.context == "q\na");
  CHECK(r.transition.tokens_in == 2);
  CHECK(r.done);
  CHECK_FALSE(r.quality.has_value());
}

TEST_CASE("missing gold is an error only while training") {
  backends::ModelPool pool({replay("m", 0.001, {{"q", "a"}})}, nullptr);
  Environment env(pool, {0.005}, bare_episode(1));
  Rng rng(0);
  CHECK_NOTHROW(env.step(init_state("q"), {0, false}, nullptr, rng, false));
  CHECK_THROWS_AS(env.step(init_state("q"), {0, false}, nullptr, rng, true), MissingGold);
}

TEST_CASE("halting actions") {
  backends::ModelPool pool({replay("a", 0.001, {{"q", "x"}}), replay("b", 0.002, {{"q", "y"}})}, nullptr);
  Environment env(pool, {0.005}, bare_episode(2, true));
  CHECK(env.num_actions() == 4);
  CHECK(env.decode_action(1).model_index == 1);
  CHECK_FALSE(env.decode_action(1).halt);
  CHECK(env.decode_action(3).model_index == 1);
  CHECK(env.decode_action(3).halt);
  CHECK(env.encode_action({1, true}) == 3);
  CHECK_THROWS_AS(env.decode_action(4), InvalidAction);

  Rng rng(0);
  const std::vector<std::string> gold{"y"};
  const auto r = env.step(init_state("q"), env.decode_action(3), &gold, rng);
  CHECK(r.done);
  CHECK(r.next.depth == 1);
  REQUIRE(r.quality.has_value());
  CHECK(*r.quality == doctest::Approx(2.0 / 3.0));

  Environment plain(pool, {0.005}, bare_episode(2, false));
  CHECK(plain.num_actions() == 2);
  CHECK(plain.encode_action({1, true}) == 1);
}

TEST_CASE("backend failures name the hop") {
  backends::ModelPool pool({replay("m", 0.001, {{"q", "a"}})}, nullptr);
  Environment env(pool, {0.005}, bare_episode(2));
  encoder::EncoderConfig enc{8, 512, 0, 1.0};
  const auto params = policy::PolicyParameters::initialize({2, 8, 4, 1}, 1);
  Rng rng(0);
  try {
    run_episode("q", nullptr, params, env, enc, rng, policy::SampleMode::kGreedy);
    FAIL("expected a backend failure");
  } catch (const BackendFailure& e) {
    CHECK(e.cause() == BackendFailure::Cause::kNotScripted);
    CHECK(std::string(e.what()).rfind("hop 1: ", 0) == 0);
  }
}

TEST_CASE("run_episode rejects mismatched policies and non-finite outputs") {
  backends::ModelPool pool({replay("m", 0.001, {{"q", "a"}, {"q\na", "b"}})}, nullptr);
  Environment env(pool, {0.005}, bare_episode(2));
  encoder::EncoderConfig enc{8, 512, 0, 1.0};
  Rng rng(0);
  CHECK_THROWS_AS(run_episode("q", nullptr, policy::PolicyParameters::zeros({2, 8, 4, 2}), env, enc, rng,
                              policy::SampleMode::kGreedy),
                  ShapeMismatch);
  auto bad = policy::PolicyParameters::zeros({2, 8, 4, 1});
  bad.b_value(0, 0) = std::nan("");
  CHECK_THROWS_AS(run_episode("q", nullptr, bad, env, enc, rng, policy::SampleMode::kGreedy), NonFiniteValue);
}

TEST_CASE("episode invariants over random simulated episodes") {
  auto scenario = simulate::default_scenario();
  scenario.episode.halting_enabled = true;
  const auto datasets = simulate::synthesize_datasets(scenario, 9);
  const auto key = simulate::build_answer_key(datasets);
  backends::ModelPool pool(scenario.specialists, key);
  Environment env(pool, scenario.reward, scenario.episode);
  encoder::EncoderConfig enc = scenario.encoder;
  enc.embed_dim = 16;
  const auto params = policy::PolicyParameters::initialize(
      {scenario.episode.max_hops, 16, 8, static_cast<int>(env.num_actions())}, 5);

  Rng pick(17);
  for (int e = 0; e < 100; ++e) {
    const auto& ds = datasets[uniform_index(pick, datasets.size())];
    const auto& ex = ds[uniform_index(pick, ds.size())];
    Rng rng(derive_seed(3, {static_cast<std::uint64_t>(e)}));
    const auto traj = run_episode(ex.query, &ex.answers, params, env, enc, rng, policy::SampleMode::kStochastic, true);

    REQUIRE_FALSE(traj.transitions.empty());
    CHECK(traj.transitions.size() <= static_cast<std::size_t>(scenario.episode.max_hops));
    double sum = 0.0;
    std::string context = ex.query;
    for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
      const auto& tr = traj.transitions[t];
      CHECK(tr.state.depth == static_cast<int>(t));
      CHECK(tr.state.cum_cost == sum);  // accumulated in the same order, so exactly equal
      CHECK(tr.state.context == context);
      CHECK(tr.step_cost > 0.0);
      CHECK(tr.step_cost == backends::estimate_cost(pool.spec(tr.action.model_index), tr.tokens_in, tr.tokens_out));
      CHECK(tr.done == (t + 1 == traj.transitions.size()));
      if (!tr.done) CHECK(tr.reward == 0.0);
      CHECK(tr.log_prob <= 0.0);
      sum += tr.step_cost;
      context += "\n" + tr.response;
    }
    CHECK(traj.final_state.cum_cost == sum);
    CHECK(traj.final_state.context == context);
    CHECK(traj.final_state.depth == static_cast<int>(traj.transitions.size()));
    REQUIRE(traj.final_quality.has_value());
    CHECK(*traj.final_quality >= 0.0);
    CHECK(*traj.final_quality <= 1.0);
    CHECK(traj.final_reward == terminal_reward(*traj.final_quality, sum, scenario.reward.alpha));
  }
}
