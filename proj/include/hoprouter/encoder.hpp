// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_ENCODER_HPP_
#define HOPROUTER_ENCODER_HPP_

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "hoprouter/routing_state.hpp"

namespace hoprouter::encoder {

struct EncoderConfig {
  int embed_dim = 64;
  int max_context_tokens = 512;
  std::uint64_t hash_seed = 0;
  double cost_scale = 1.0;  // multiplier on the cumulative-cost feature
};

/// [context embedding (d) | stage embedding (d) | cost scalar], length 2d+1.
struct StateFeatures {
  Eigen::VectorXd vector;
};

/// Signed feature hashing of the most recent `max_context_tokens` whitespace
/// tokens, L2-normalised. Empty text maps to the zero vector.
Eigen::VectorXd embed_text(std::string_view text, const EncoderConfig& cfg);

/// Throws DepthOutOfRange when `stage_table` has no row for `state.depth`.
StateFeatures encode_state(const RoutingState& state, const EncoderConfig& cfg,
                           const Eigen::MatrixXd& stage_table);

/// Concatenation used by both encode_state and the training path, which keeps
/// the pieces apart so gradients can reach the stage table.
StateFeatures assemble_features(const Eigen::VectorXd& text_embedding, const Eigen::MatrixXd& stage_table,
                                int depth, double cost_feature);

}  // namespace hoprouter::encoder

#endif  // HOPROUTER_ENCODER_HPP_
