// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hoprouter/error.hpp"
#include "hoprouter/ppo.hpp"
#include "hoprouter/simulate.hpp"
#include "oracles.hpp"

using namespace hoprouter;
using namespace hoprouter::ppo;

namespace {

const policy::PolicyShape kShape{2, 4, 8, 3};

/// A hand-built buffer of `n` two-step episodes whose stored log-probs and
/// values are exactly what `params` produces, so every ratio starts at 1.
RolloutBuffer synthetic_buffer(const policy::PolicyParameters& params, std::size_t episodes, Rng& rng) {
  RolloutBuffer buf;
  for (std::size_t e = 0; e < episodes; ++e) {
    buf.episode_starts.push_back(buf.size());
    for (int t = 0; t < 2; ++t) {
      policy::PolicyInput in;
      in.text_embedding = Eigen::VectorXd::NullaryExpr(kShape.embed_dim, [&] { return 2.0 * uniform01(rng) - 1.0; });
      in.depth = t;
      in.cost_feature = 0.01 * uniform01(rng);
      const auto out = policy::forward(params, in);
      const auto a = uniform_index(rng, static_cast<std::size_t>(kShape.num_actions));
      buf.inputs.push_back(in);
      buf.actions.push_back(a);
      buf.rewards.push_back(t == 1 ? uniform01(rng) : 0.0);
      buf.dones.push_back(t == 1);
      buf.log_prob_old.push_back(policy::log_prob_entropy(out.logits, a).log_prob);
      buf.value_old.push_back(out.value);
    }
  }
  auto gae = compute_gae(buf.rewards, buf.value_old, buf.dones, 0.99, 0.95);
  buf.advantages = gae.advantages;
  buf.returns = gae.returns;
  normalize_advantages(buf.advantages);
  return buf;
}

std::vector<std::size_t> all_rows(const RolloutBuffer& buf) {
  std::vector<std::size_t> idx(buf.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

bool all_zero(const policy::PolicyParameters& p) {
  for (const auto* t : p.tensors())
    if (!t->isZero(0.0)) return false;
  return true;
}

}  // namespace

TEST_CASE("GAE worked examples") {
  const auto one = compute_gae({1.0}, {0.5}, {true}, 0.99, 0.95);
  CHECK(one.advantages[0] == doctest::Approx(0.5));
  CHECK(one.returns[0] == doctest::Approx(1.0));

  const auto two = compute_gae({0.0, 1.0}, {0.2, 0.4}, {false, true}, 0.99, 0.95);
  CHECK(two.advantages[1] == doctest::Approx(0.6));
  CHECK(two.advantages[0] == doctest::Approx(0.196 + 0.99 * 0.95 * 0.6).epsilon(1e-14));
  CHECK(two.returns[0] == doctest::Approx(two.advantages[0] + 0.2));

  // nothing leaks across an episode boundary
  const auto split = compute_gae({5.0, 1.0}, {0.0, 0.0}, {true, true}, 0.99, 0.95);
  CHECK(split.advantages[0] == 5.0);
  CHECK(split.advantages[1] == 1.0);

  CHECK(compute_gae({}, {}, {}, 0.9, 0.9).advantages.empty());
  CHECK_THROWS_AS(compute_gae({0.0, 1.0}, {0.0, 0.0}, {true, false}, 0.99, 0.95), UnterminatedEpisode);
  CHECK_THROWS_AS(compute_gae({0.0}, {0.0, 0.0}, {true}, 0.99, 0.95), ShapeMismatch);
}

TEST_CASE("GAE agrees with the definition sum") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r, v;
    std::vector<bool> d;
    const int episodes = 1 + static_cast<int>(uniform_index(rng, 4));
    for (int e = 0; e < episodes; ++e) {
      const auto len = 1 + uniform_index(rng, 5);
      for (std::size_t t = 0; t < len; ++t) {
        r.push_back(4.0 * uniform01(rng) - 2.0);
        v.push_back(4.0 * uniform01(rng) - 2.0);
        d.push_back(t + 1 == len);
      }
    }
    const double gamma = 1.0 - uniform01(rng);  // (0, 1]
    const double lambda = 1.0 - uniform01(rng);
    const auto got = compute_gae(r, v, d, gamma, lambda);
    const auto want = oracle::gae_definition_sum(r, v, d, gamma, lambda);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(std::abs(got.advantages[i] - want[i]) <= 1e-10);
      CHECK(std::abs(got.returns[i] - (want[i] + v[i])) <= 1e-10);
    }
  }
}

TEST_CASE("GAE with gamma = lambda = 1 is rewards-to-go minus value") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto len = 1 + uniform_index(rng, 5);
    std::vector<double> r(len), v(len);
    std::vector<bool> d(len, false);
    d.back() = true;
    for (std::size_t t = 0; t < len; ++t) {
      r[t] = uniform01(rng);
      v[t] = uniform01(rng);
    }
    const auto got = compute_gae(r, v, d, 1.0, 1.0);
    for (std::size_t t = 0; t < len; ++t) {
      const double to_go = std::accumulate(r.begin() + static_cast<std::ptrdiff_t>(t), r.end(), 0.0);
      CHECK(got.advantages[t] == doctest::Approx(to_go - v[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("advantage normalisation") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  normalize_advantages(a);
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 4.0;
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  CHECK(std::abs(mean) < 1e-12);
  CHECK(std::sqrt(var / 4.0) == doctest::Approx(1.0).epsilon(1e-7));

  std::vector<double> flat{3.0, 3.0, 3.0};
  normalize_advantages(flat);
  for (double x : flat) CHECK(x == 0.0);

  std::vector<double> empty;
  normalize_advantages(empty);
  CHECK(empty.empty());
}

TEST_CASE("fresh buffer: unit ratios and no clipping") {
  const auto params = policy::PolicyParameters::initialize(kShape, 1);
  Rng rng(3);
  const auto buf = synthetic_buffer(params, 32, rng);
  PpoConfig cfg;
  const auto idx = all_rows(buf);
  const auto r = ppo_loss(params, buf, idx, cfg);
  CHECK(r.stats.clip_fraction == 0.0);
  const double mean_adv = std::accumulate(buf.advantages.begin(), buf.advantages.end(), 0.0) / buf.size();
  CHECK(r.stats.policy_loss == doctest::Approx(-mean_adv).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(r.stats.policy_loss + cfg.value_coef * r.stats.value_loss -
                                   cfg.entropy_coef * r.stats.entropy));
  CHECK(r.stats.entropy > 0.0);
  CHECK(r.stats.entropy <= std::log(3.0) + 1e-12);
}

TEST_CASE("clipped branch carries no policy gradient") {
  const auto params = policy::PolicyParameters::initialize(kShape, 4);
  Rng rng(5);
  auto buf = synthetic_buffer(params, 4, rng);
  PpoConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  for (double& lp : buf.log_prob_old) lp -= std::log(1.5);  // ratio 1.5 everywhere
  const auto idx = all_rows(buf);

  for (double& a : buf.advantages) a = 1.0;
  const auto pos = ppo_loss(params, buf, idx, cfg);
  CHECK(pos.stats.clip_fraction == 1.0);
  CHECK(pos.stats.policy_loss == doctest::Approx(-1.2));
  CHECK(all_zero(pos.grad));

  for (double& a : buf.advantages) a = -1.0;
  const auto neg = ppo_loss(params, buf, idx, cfg);
  CHECK(neg.stats.policy_loss == doctest::Approx(1.5));
  CHECK(global_norm(neg.grad) > 0.0);
}

TEST_CASE("zero advantages leave only value and entropy terms") {
  const auto params = policy::PolicyParameters::initialize(kShape, 6);
  Rng rng(6);
  auto buf = synthetic_buffer(params, 4, rng);
  std::fill(buf.advantages.begin(), buf.advantages.end(), 0.0);
  PpoConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  const auto r = ppo_loss(params, buf, all_rows(buf), cfg);
  CHECK(r.stats.policy_loss == 0.0);
  CHECK(all_zero(r.grad));
}

TEST_CASE("PPO loss gradients match finite differences") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const auto params = policy::PolicyParameters::initialize(kShape, 50 + static_cast<std::uint64_t>(trial));
    auto buf = synthetic_buffer(params, 6, rng);
    // ratios spread inside (0.85, 1.15) keep every sample away from the clip kinks
    for (double& lp : buf.log_prob_old) lp += 0.28 * uniform01(rng) - 0.14;
    PpoConfig cfg;
    const auto idx = all_rows(buf);
    std::vector<policy::PolicyInput> batch;
    for (auto i : idx) batch.push_back(buf.inputs[i]);
    if (oracle::min_abs_preactivation(params, batch) < 1e-4) continue;
    const auto loss = make_ppo_loss(buf, idx, cfg, nullptr);
    const auto r = ppo_loss(params, buf, idx, cfg);
    CHECK(oracle::max_fd_relative_error(params, batch, loss, r.grad) < 1e-4);
  }
}

TEST_CASE("ppo_loss input checks") {
  const auto params = policy::PolicyParameters::initialize(kShape, 1);
  Rng rng(1);
  auto buf = synthetic_buffer(params, 2, rng);
  PpoConfig cfg;
  CHECK_THROWS_AS(ppo_loss(params, buf, std::vector<std::size_t>{}, cfg), ShapeMismatch);
  buf.returns.clear();
  CHECK_THROWS_AS(ppo_loss(params, buf, all_rows(buf), cfg), ShapeMismatch);
}

TEST_CASE("clip_grad_norm") {
  auto g = policy::PolicyParameters::zeros(kShape);
  g.b1(0, 0) = 3.0;
  g.b_logit(1, 0) = 4.0;
  CHECK(clip_grad_norm(g, 0.3) == doctest::Approx(5.0));
  CHECK(global_norm(g) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(g.b1(0, 0) / g.b_logit(1, 0) == doctest::Approx(0.75));

  auto small = policy::PolicyParameters::zeros(kShape);
  small.b1(0, 0) = 0.1;
  CHECK(clip_grad_norm(small, 0.3) == doctest::Approx(0.1));
  CHECK(small.b1(0, 0) == 0.1);
  CHECK_THROWS_AS(clip_grad_norm(small, 0.0), DomainError);
}

TEST_CASE("Adam steps") {
  PpoConfig cfg;
  auto p = policy::PolicyParameters::zeros(kShape);
  auto g = policy::PolicyParameters::zeros(kShape);
  g.b1(0, 0) = 0.5;
  g.b1(1, 0) = -2.0;
  auto opt = AdamState::for_params(p);
  adam_step(opt, p, g, 0.1, cfg);
  // bias correction makes the first step lr * g / (|g| + eps)
  CHECK(p.b1(0, 0) == doctest::Approx(-0.1 * 0.5 / (0.5 + 1e-4)).epsilon(1e-14));
  CHECK(p.b1(1, 0) == doctest::Approx(0.1 * 2.0 / (2.0 + 1e-4)).epsilon(1e-14));
  CHECK(p.b1(2, 0) == 0.0);
  CHECK(opt.step == 1);

  adam_step(opt, p, g, 0.1, cfg);
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 0.5;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 0.25;
  const double second = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-4);
  CHECK(p.b1(0, 0) == doctest::Approx(-0.1 * 0.5 / (0.5 + 1e-4) - second).epsilon(1e-13));

  auto wrong = policy::PolicyParameters::zeros({2, 4, 8, 2});
  CHECK_THROWS_AS(adam_step(opt, p, wrong, 0.1, cfg), ShapeMismatch);
}

TEST_CASE("minibatch partition") {
  Rng rng(0);
  const auto parts = partition_minibatches(10, 3, rng);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].size() == 3);
  CHECK(parts[1].size() == 3);
  CHECK(parts[2].size() == 4);
  std::set<std::size_t> seen;
  for (const auto& p : parts) seen.insert(p.begin(), p.end());
  CHECK(seen.size() == 10);
  CHECK(*seen.rbegin() == 9);

  const auto sparse = partition_minibatches(2, 4, rng);
  REQUIRE(sparse.size() == 1);
  CHECK(sparse[0].size() == 2);
  CHECK(partition_minibatches(0, 4, rng).empty());
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.minibatches = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("metrics CSV") {
  CHECK(metrics_csv_header() == "iter,mean_reward,mean_quality,mean_cost,policy_loss,value_loss,entropy,clip_fraction\n");
  CHECK(metrics_csv_row({3, 0.5, 0.25, 0.125, -1.0, 2.0, 1.5, 0.0}) == "3,0.5,0.25,0.125,-1,2,1.5,0\n");
  CHECK(metrics_csv({}) == metrics_csv_header());
}

namespace {

struct SmallRun {
  simulate::Scenario scenario = simulate::default_scenario();
  std::vector<std::vector<data::Example>> datasets;
  std::shared_ptr<backends::AnswerKey> key;
  std::unique_ptr<backends::ModelPool> pool;
  std::unique_ptr<Environment> env;
  std::vector<data::Example> train_set;

  explicit SmallRun(std::size_t models = 3) {
    scenario.specialists.resize(models);
    for (auto& t : scenario.tasks) t.count = 40;
    scenario.encoder.embed_dim = 16;
    scenario.ppo.iterations = 3;
    scenario.ppo.rollouts_per_iter = 24;
    scenario.ppo.minibatches = 4;
    scenario.ppo.epochs_per_iter = 2;
    scenario.ppo.lr = 3e-3;
    datasets = simulate::synthesize_datasets(scenario, 1);
    key = simulate::build_answer_key(datasets);
    pool = std::make_unique<backends::ModelPool>(scenario.specialists, key);
    env = std::make_unique<Environment>(*pool, scenario.reward, scenario.episode);
    train_set = simulate::prepare_splits(datasets, scenario.cap, scenario.train_fraction, 1).train;
  }

  policy::PolicyParameters init() const {
    return policy::PolicyParameters::initialize(
        {scenario.episode.max_hops, scenario.encoder.embed_dim, 8, static_cast<int>(env->num_actions())}, 7);
  }

  TrainResult run(const PpoConfig& cfg) const { return train(train_set, *env, init(), scenario.encoder, cfg); }
};

}  // namespace

TEST_CASE("training is deterministic and independent of the worker count") {
  const SmallRun run;
  const auto a = run.run(run.scenario.ppo);
  const auto b = run.run(run.scenario.ppo);
  auto threaded_cfg = run.scenario.ppo;
  threaded_cfg.threads = 3;
  const auto c = run.run(threaded_cfg);
  CHECK(metrics_csv(a.metrics) == metrics_csv(b.metrics));
  CHECK(metrics_csv(a.metrics) == metrics_csv(c.metrics));
  CHECK(a.params.w1 == c.params.w1);
  CHECK(a.metrics.size() == 3);

  for (double n : a.post_clip_grad_norms) CHECK(n <= run.scenario.ppo.max_grad_norm + 1e-9);
  CHECK(a.post_clip_grad_norms.size() == 3u * 2u * 4u);
  REQUIRE_FALSE(a.first_epoch_clip_fractions.empty());
  CHECK(a.first_epoch_clip_fractions.front() == 0.0);

  auto other_seed = run.scenario.ppo;
  other_seed.seed = 43;
  CHECK(metrics_csv(run.run(other_seed).metrics) != metrics_csv(a.metrics));
}

TEST_CASE("a one-model pool trains with zero entropy") {
  const SmallRun run(1);
  const auto r = run.run(run.scenario.ppo);
  for (const auto& row : r.metrics) {
    CHECK(row.entropy == 0.0);
    CHECK(row.clip_fraction == 0.0);
  }
}

TEST_CASE("training rejects an empty training set") {
  const SmallRun run;
  CHECK_THROWS_AS(train({}, *run.env, run.init(), run.scenario.encoder, run.scenario.ppo), ConfigError);
}
