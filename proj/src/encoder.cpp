// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/encoder.hpp"

#include <vector>

#include "hoprouter/error.hpp"
#include "hoprouter/rng.hpp"

namespace hoprouter::encoder {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Eigen::VectorXd embed_text(std::string_view text, const EncoderConfig& cfg) {
  if (cfg.embed_dim < 1) throw DomainError("embed_dim must be >= 1");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.embed_dim);

  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  std::size_t first = 0;
  if (cfg.max_context_tokens >= 0 && tokens.size() > static_cast<std::size_t>(cfg.max_context_tokens))
    first = tokens.size() - static_cast<std::size_t>(cfg.max_context_tokens);

  const auto d = static_cast<std::uint64_t>(cfg.embed_dim);
  for (std::size_t t = first; t < tokens.size(); ++t) {
    const std::uint64_t h = splitmix64(fnv1a(tokens[t]) ^ splitmix64(cfg.hash_seed));
    v[static_cast<Eigen::Index>(h % d)] += (h >> 63) ? -1.0 : 1.0;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

StateFeatures assemble_features(const Eigen::VectorXd& text_embedding, const Eigen::MatrixXd& stage_table,
                                int depth, double cost_feature) {
  if (depth < 0 || depth >= stage_table.rows())
    throw DepthOutOfRange("depth " + std::to_string(depth) + " has no stage embedding");
  const Eigen::Index d = text_embedding.size();
  if (stage_table.cols() != d) throw ShapeMismatch("stage table width differs from embedding dimension");
  StateFeatures f;
  f.vector.resize(2 * d + 1);
  f.vector.head(d) = text_embedding;
  f.vector.segment(d, d) = stage_table.row(depth).transpose();
  f.vector[2 * d] = cost_feature;
  return f;
}

StateFeatures encode_state(const RoutingState& state, const EncoderConfig& cfg, const Eigen::MatrixXd& stage_table) {
  if (state.depth < 0 || state.depth >= stage_table.rows())
    throw DepthOutOfRange("depth " + std::to_string(state.depth) + " has no stage embedding");
  return assemble_features(embed_text(state.context, cfg), stage_table, state.depth, state.cum_cost * cfg.cost_scale);
}

}  // namespace hoprouter::encoder
