// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "hoprouter/error.hpp"

namespace hoprouter::ppo {

using policy::PolicyParameters;

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0,1]");
  if (!(clip > 0.0)) throw ConfigError("clip must be positive");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (!(lr > 0.0) || !(adam_eps > 0.0)) throw ConfigError("lr and adam_eps must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0,1)");
  if (value_coef < 0.0 || entropy_coef < 0.0 || advantage_clip < 0.0)
    throw ConfigError("loss coefficients must be non-negative");
  if (iterations < 1 || rollouts_per_iter < 1 || minibatches < 1 || epochs_per_iter < 1 || threads < 1)
    throw ConfigError("iteration, rollout, minibatch, epoch and thread counts must be >= 1");
}

void RolloutBuffer::add_episode(const Trajectory& traj) {
  episode_starts.push_back(size());
  for (const auto& t : traj.transitions) {
    inputs.push_back(t.policy_input);
    actions.push_back(t.action_index);
    rewards.push_back(t.reward);
    dones.push_back(t.done);
    log_prob_old.push_back(t.log_prob);
    value_old.push_back(t.value_estimate);
  }
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<bool>& dones, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ShapeMismatch("GAE inputs must be parallel arrays");
  if (n > 0 && !dones.back()) throw UnterminatedEpisode("last step of the rollout is not terminal");

  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  double next_value = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    if (dones[k]) {
      running = 0.0;
      next_value = 0.0;
    }
    const double delta = rewards[k] + gamma * next_value - values[k];
    running = delta + gamma * lambda * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
    next_value = values[k];
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double denom = std::sqrt(var / n) + 1e-8;
  for (double& a : adv) a = (a - mean) / denom;
}

policy::LossDefinition make_ppo_loss(const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                                     const PpoConfig& cfg, LossStats* stats) {
  return [&buffer, indices, cfg, stats](std::span<const policy::PolicyOutput> outputs,
                                        std::span<policy::OutputGradient> grads) {
    const double inv_b = 1.0 / static_cast<double>(outputs.size());
    double policy_sum = 0.0;
    double value_sum = 0.0;
    double entropy_sum = 0.0;
    std::size_t clipped = 0;

    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const std::size_t row = indices[i];
      const auto& out = outputs[i];
      const std::size_t action = buffer.actions[row];
      const double adv = buffer.advantages[row];

      const auto lpe = policy::log_prob_entropy(out.logits, action);
      const Eigen::ArrayXd probs = policy::action_distribution(out.logits).probs.array();

      const double ratio = std::exp(lpe.log_prob - buffer.log_prob_old[row]);
      const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
      const double unclipped_obj = ratio * adv;
      const double clipped_obj = clipped_ratio * adv;
      policy_sum += std::min(unclipped_obj, clipped_obj);
      if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;

      // d(-mean surrogate)/d log_prob; zero when the clipped branch is the minimum.
      const double d_logp = unclipped_obj <= clipped_obj ? -inv_b * ratio * adv : 0.0;
      Eigen::VectorXd d_logits = -probs.matrix() * d_logp;
      d_logits[static_cast<Eigen::Index>(action)] += d_logp;

      // d(-entropy_coef * mean H)/d logits, with dH/dz_j = -p_j (log p_j + H).
      const Eigen::ArrayXd log_p = probs.max(1e-300).log();
      const Eigen::ArrayXd d_h = -probs * (log_p + lpe.entropy);
      d_logits -= (cfg.entropy_coef * inv_b) * d_h.matrix();
      entropy_sum += lpe.entropy;

      const double err = out.value - buffer.returns[row];
      value_sum += err * err;
      grads[i].d_logits = d_logits;
      grads[i].d_value = cfg.value_coef * inv_b * 2.0 * err;
    }

    LossStats s;
    s.policy_loss = -policy_sum * inv_b;
    s.value_loss = value_sum * inv_b;
    s.entropy = entropy_sum * inv_b;
    s.clip_fraction = static_cast<double>(clipped) * inv_b;
    if (!std::isfinite(s.policy_loss)) throw NonFiniteLoss("policy", "policy loss is not finite");
    if (!std::isfinite(s.value_loss)) throw NonFiniteLoss("value", "value loss is not finite");
    if (!std::isfinite(s.entropy)) throw NonFiniteLoss("entropy", "entropy is not finite");
    if (stats != nullptr) *stats = s;
    return s.policy_loss + cfg.value_coef * s.value_loss - cfg.entropy_coef * s.entropy;
  };
}

PpoLossResult ppo_loss(const PolicyParameters& params, const RolloutBuffer& buffer,
                       std::span<const std::size_t> indices, const PpoConfig& cfg) {
  if (indices.empty()) throw ShapeMismatch("empty minibatch");
  if (buffer.advantages.size() != buffer.size() || buffer.returns.size() != buffer.size())
    throw ShapeMismatch("advantages must be computed before the loss");
  std::vector<policy::PolicyInput> batch;
  batch.reserve(indices.size());
  for (std::size_t row : indices) batch.push_back(buffer.inputs.at(row));

  PpoLossResult r;
  auto g = policy::gradients(params, batch, make_ppo_loss(buffer, indices, cfg, &r.stats));
  r.total = g.loss;
  r.grad = std::move(g.grad);
  if (!std::isfinite(r.total)) throw NonFiniteLoss("total", "total loss is not finite");
  return r;
}

double global_norm(const PolicyParameters& grads) {
  double sq = 0.0;
  for (const auto* t : grads.tensors()) sq += t->squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(PolicyParameters& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw DomainError("max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* t : grads.tensors()) *t *= scale;
  }
  return norm;
}

AdamState AdamState::for_params(const PolicyParameters& params) {
  return {PolicyParameters::zeros(params.shape()), PolicyParameters::zeros(params.shape()), 0};
}

void adam_step(AdamState& opt, PolicyParameters& params, const PolicyParameters& grads, double lr,
               const PpoConfig& cfg) {
  if (!(params.shape() == grads.shape()) || !(params.shape() == opt.m.shape()) || !(params.shape() == opt.v.shape()))
    throw ShapeMismatch("Adam state, parameters and gradients differ in shape");
  ++opt.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  auto ms = opt.m.tensors();
  auto vs = opt.v.tensors();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto m = ms[k]->array();
    auto v = vs[k]->array();
    const auto g = gs[k]->array();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    ps[k]->array() -= lr * (m / corr1) / ((v / corr2).sqrt() + cfg.adam_eps);
  }
}

std::vector<std::vector<std::size_t>> partition_minibatches(std::size_t n, int parts, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  const auto k = static_cast<std::size_t>(std::max(parts, 1));
  const std::size_t base = n / k;
  std::vector<std::vector<std::size_t>> out;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t len = p + 1 == k ? n - pos : base;
    if (len == 0) continue;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

std::string metrics_csv_header() {
  return "iter,mean_reward,mean_quality,mean_cost,policy_loss,value_loss,entropy,clip_fraction\n";
}

std::string metrics_csv_row(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{}\n", r.iter, r.mean_reward, r.mean_quality, r.mean_cost, r.policy_loss,
                     r.value_loss, r.entropy, r.clip_fraction);
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_csv_header();
  for (const auto& r : rows) out += metrics_csv_row(r);
  return out;
}

std::vector<Trajectory> collect_rollouts(const std::vector<data::Example>& train_set, const Environment& env,
                                         const PolicyParameters& params, const encoder::EncoderConfig& enc,
                                         const PpoConfig& cfg, int iteration) {
  const auto n = static_cast<std::size_t>(cfg.rollouts_per_iter);
  const auto iter = static_cast<std::uint64_t>(iteration);

  std::vector<std::size_t> picks(n);
  Rng query_rng(derive_seed(cfg.seed, {iter, 1}));
  for (auto& p : picks) p = uniform_index(query_rng, train_set.size());

  std::vector<Trajectory> out(n);
  const auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      Rng rng(derive_seed(cfg.seed, {iter, 2, e}));
      const auto& ex = train_set[picks[e]];
      out[e] = run_episode(ex.query, &ex.answers, params, env, enc, rng, policy::SampleMode::kStochastic, true);
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n);
  if (workers <= 1) {
    run_range(0, n);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run_range(n * w / workers, n * (w + 1) / workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

TrainResult train(const std::vector<data::Example>& train_set, const Environment& env, PolicyParameters init,
                  const encoder::EncoderConfig& enc, const PpoConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");

  TrainResult result;
  result.params = std::move(init);
  AdamState opt = AdamState::for_params(result.params);
  const double total_updates = static_cast<double>(cfg.iterations) * cfg.epochs_per_iter * cfg.minibatches;
  std::int64_t update = 0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const auto trajectories = collect_rollouts(train_set, env, result.params, enc, cfg, iter);

    RolloutBuffer buf;
    MetricsRow row;
    row.iter = iter;
    for (const auto& t : trajectories) {
      buf.add_episode(t);
      row.mean_reward += t.final_reward;
      row.mean_quality += t.final_quality.value_or(0.0);
      row.mean_cost += t.final_state.cum_cost;
    }
    const double n_eps = static_cast<double>(trajectories.size());
    row.mean_reward /= n_eps;
    row.mean_quality /= n_eps;
    row.mean_cost /= n_eps;

    auto gae = compute_gae(buf.rewards, buf.value_old, buf.dones, cfg.gamma, cfg.lambda);
    buf.advantages = std::move(gae.advantages);
    buf.returns = std::move(gae.returns);
    if (cfg.advantage_norm) normalize_advantages(buf.advantages);
    if (cfg.advantage_clip > 0.0)
      for (double& a : buf.advantages) a = std::clamp(a, -cfg.advantage_clip, cfg.advantage_clip);

    int n_updates = 0;
    for (int epoch = 0; epoch < cfg.epochs_per_iter; ++epoch) {
      Rng shuffle_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(iter), 3, static_cast<std::uint64_t>(epoch)}));
      for (const auto& mb : partition_minibatches(buf.size(), cfg.minibatches, shuffle_rng)) {
        PpoLossResult loss = ppo_loss(result.params, buf, mb, cfg);
        if (epoch == 0) result.first_epoch_clip_fractions.push_back(loss.stats.clip_fraction);
        clip_grad_norm(loss.grad, cfg.max_grad_norm);
        result.post_clip_grad_norms.push_back(global_norm(loss.grad));

        double lr = cfg.lr;
        if (cfg.lr_schedule == LrSchedule::kCosine)
          lr = 0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(update) / total_updates));
        adam_step(opt, result.params, loss.grad, lr, cfg);
        ++update;

        row.policy_loss += loss.stats.policy_loss;
        row.value_loss += loss.stats.value_loss;
        row.entropy += loss.stats.entropy;
        row.clip_fraction += loss.stats.clip_fraction;
        ++n_updates;
      }
    }
    if (n_updates > 0) {
      row.policy_loss /= n_updates;
      row.value_loss /= n_updates;
      row.entropy /= n_updates;
      row.clip_fraction /= n_updates;
    }
    if (!result.params.all_finite()) throw NonFiniteLoss("parameters", "parameters became non-finite");
    result.metrics.push_back(row);
    if (on_iteration) on_iteration(row);
  }
  return result;
}

}  // namespace hoprouter::ppo
