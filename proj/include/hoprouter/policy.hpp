// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_POLICY_HPP_
#define HOPROUTER_POLICY_HPP_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hoprouter/encoder.hpp"
#include "hoprouter/rng.hpp"

namespace hoprouter::policy {

inline constexpr double kLogitClamp = 20.0;

struct PolicyShape {
  int num_stages = 2;   // L
  int embed_dim = 64;   // d
  int hidden = 64;      // h
  int num_actions = 3;  // A = M, or 2M with halting

  int feature_dim() const noexcept { return 2 * embed_dim + 1; }
  bool operator==(const PolicyShape&) const = default;
};

/// Stage embeddings, two rectified affine layers, a logit head and a value
/// head sharing that trunk. Every tensor is a column-major matrix; vectors are
/// n x 1.
struct PolicyParameters {
  Eigen::MatrixXd stage_table;  // L x d
  Eigen::MatrixXd w1, b1;       // h x (2d+1), h x 1
  Eigen::MatrixXd w2, b2;       // h x h, h x 1
  Eigen::MatrixXd w_logit, b_logit;  // A x h, A x 1
  Eigen::MatrixXd w_value, b_value;  // 1 x h, 1 x 1

  static constexpr std::size_t kNumTensors = 9;
  static const std::array<std::string_view, kNumTensors>& tensor_names();

  std::array<Eigen::MatrixXd*, kNumTensors> tensors();
  std::array<const Eigen::MatrixXd*, kNumTensors> tensors() const;

  PolicyShape shape() const;
  /// Same shapes, all zeros.
  static PolicyParameters zeros(const PolicyShape& shape);
  /// Weights and biases uniform in +-1/sqrt(fan_in); stage rows N(0, 0.02^2).
  static PolicyParameters initialize(const PolicyShape& shape, std::uint64_t seed);

  std::size_t num_values() const;
  bool all_finite() const;
};

/// Network input before the stage lookup, kept apart so the training path can
/// differentiate through the stage table.
struct PolicyInput {
  Eigen::VectorXd text_embedding;
  int depth = 0;
  double cost_feature = 0.0;
};

struct PolicyOutput {
  Eigen::VectorXd logits;  // clamped to [-20, 20]
  double value = 0.0;
};

struct ActionDistribution {
  Eigen::VectorXd probs;
};

enum class SampleMode { kStochastic, kGreedy };

/// Throws ShapeMismatch when the feature length is not 2d+1.
PolicyOutput forward(const PolicyParameters& params, const encoder::StateFeatures& features);
PolicyOutput forward(const PolicyParameters& params, const PolicyInput& input);

/// Clamped, max-shifted softmax. Throws NonFiniteLogit on NaN or infinity.
ActionDistribution action_distribution(const Eigen::VectorXd& logits);

/// Inverse-CDF draw, or argmax with the lowest index winning ties.
std::size_t sample(const ActionDistribution& dist, Rng& rng, SampleMode mode);

struct LogProbEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};

/// Throws IndexOutOfRange when `action` >= logits.size().
LogProbEntropy log_prob_entropy(const Eigen::VectorXd& logits, std::size_t action);

/// dLoss/dlogits and dLoss/dvalue for one sample of a minibatch.
struct OutputGradient {
  Eigen::VectorXd d_logits;
  double d_value = 0.0;
};

/// Scalar loss over a minibatch of network outputs. Implementations return the
/// loss and fill one OutputGradient per sample (pre-sized, zeroed).
using LossDefinition = std::function<double(std::span<const PolicyOutput>, std::span<OutputGradient>)>;

struct GradientResult {
  double loss = 0.0;
  PolicyParameters grad;
};

/// Exact backpropagation of `loss` to every trainable value.
GradientResult gradients(const PolicyParameters& params, std::span<const PolicyInput> minibatch,
                         const LossDefinition& loss);

/// Versioned JSON checkpoint. Values round-trip bit-exactly.
std::string to_checkpoint_json(const PolicyParameters& params, const std::string& extra_json = "null");
PolicyParameters from_checkpoint_json(const std::string& text, std::string* extra_json = nullptr);
void save_checkpoint(const std::string& path, const PolicyParameters& params, const std::string& extra_json = "null");
PolicyParameters load_checkpoint(const std::string& path, std::string* extra_json = nullptr);

}  // namespace hoprouter::policy

#endif  // HOPROUTER_POLICY_HPP_
