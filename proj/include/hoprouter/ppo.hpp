// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_PPO_HPP_
#define HOPROUTER_PPO_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hoprouter/core.hpp"
#include "hoprouter/data.hpp"
#include "hoprouter/policy.hpp"

namespace hoprouter::ppo {

enum class LrSchedule { kConstant, kCosine };

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.3;
  double lr = 1e-4;
  double adam_eps = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int iterations = 8;
  int rollouts_per_iter = 128;
  int minibatches = 16;
  int epochs_per_iter = 4;
  std::uint64_t seed = 42;
  bool advantage_norm = true;
  double advantage_clip = 0.0;  // 0 disables; applied after normalisation
  LrSchedule lr_schedule = LrSchedule::kConstant;
  int threads = 1;  // rollout workers; results do not depend on this

  /// Throws ConfigError on out-of-range constants.
  void validate() const;
};

/// Per-step arrays for one iteration's rollouts. Episodes are contiguous.
struct RolloutBuffer {
  std::vector<policy::PolicyInput> inputs;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::vector<double> log_prob_old;
  std::vector<double> value_old;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<std::size_t> episode_starts;

  void add_episode(const Trajectory& traj);
  std::size_t size() const noexcept { return actions.size(); }
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Backward GAE recursion per episode with a zero bootstrap after each done.
/// Throws UnterminatedEpisode if the final step is not done.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<bool>& dones, double gamma, double lambda);

/// Subtract the mean, divide by (population std + 1e-8).
void normalize_advantages(std::vector<double>& advantages);

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

struct PpoLossResult {
  double total = 0.0;
  LossStats stats;
  policy::PolicyParameters grad;
};

/// Clipped surrogate + value_coef * MSE - entropy_coef * entropy over the
/// buffer rows in `indices`, with exact gradients. Throws NonFiniteLoss.
PpoLossResult ppo_loss(const policy::PolicyParameters& params, const RolloutBuffer& buffer,
                       std::span<const std::size_t> indices, const PpoConfig& cfg);

/// The LossDefinition behind ppo_loss, exposed for gradient checking.
policy::LossDefinition make_ppo_loss(const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                                     const PpoConfig& cfg, LossStats* stats);

double global_norm(const policy::PolicyParameters& grads);

/// Rescales `grads` in place so the global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(policy::PolicyParameters& grads, double max_norm);

struct AdamState {
  policy::PolicyParameters m;
  policy::PolicyParameters v;
  std::int64_t step = 0;

  static AdamState for_params(const policy::PolicyParameters& params);
};

/// Bias-corrected Adam. Throws ShapeMismatch if shapes disagree.
void adam_step(AdamState& opt, policy::PolicyParameters& params, const policy::PolicyParameters& grads, double lr,
               const PpoConfig& cfg);

/// Step-index partition: shuffled, `parts` near-equal pieces, remainder in
/// the last one. Empty pieces are dropped.
std::vector<std::vector<std::size_t>> partition_minibatches(std::size_t n, int parts, Rng& rng);

struct MetricsRow {
  int iter = 0;
  double mean_reward = 0.0;
  double mean_quality = 0.0;
  double mean_cost = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct TrainResult {
  policy::PolicyParameters params;
  std::vector<MetricsRow> metrics;
  std::vector<double> post_clip_grad_norms;        // one per optimizer step
  std::vector<double> first_epoch_clip_fractions;  // one per first-epoch minibatch
};

using IterationCallback = std::function<void(const MetricsRow&)>;

/// The full PPO loop: rollouts, GAE, shuffled minibatch epochs, clipped Adam.
TrainResult train(const std::vector<data::Example>& train_set, const Environment& env,
                  policy::PolicyParameters init, const encoder::EncoderConfig& enc, const PpoConfig& cfg,
                  const IterationCallback& on_iteration = {});

/// Rollouts for one iteration, in episode order.
std::vector<Trajectory> collect_rollouts(const std::vector<data::Example>& train_set, const Environment& env,
                                         const policy::PolicyParameters& params,
                                         const encoder::EncoderConfig& enc, const PpoConfig& cfg, int iteration);

}  // namespace hoprouter::ppo

#endif  // HOPROUTER_PPO_HPP_
