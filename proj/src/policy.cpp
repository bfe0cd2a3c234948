// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hoprouter/error.hpp"

namespace hoprouter::policy {

using json = nlohmann::json;

const std::array<std::string_view, PolicyParameters::kNumTensors>& PolicyParameters::tensor_names() {
  static const std::array<std::string_view, kNumTensors> names = {
      "stage_table", "w1", "b1", "w2", "b2", "w_logit", "b_logit", "w_value", "b_value"};
  return names;
}

std::array<Eigen::MatrixXd*, PolicyParameters::kNumTensors> PolicyParameters::tensors() {
  return {&stage_table, &w1, &b1, &w2, &b2, &w_logit, &b_logit, &w_value, &b_value};
}

std::array<const Eigen::MatrixXd*, PolicyParameters::kNumTensors> PolicyParameters::tensors() const {
  return {&stage_table, &w1, &b1, &w2, &b2, &w_logit, &b_logit, &w_value, &b_value};
}

PolicyShape PolicyParameters::shape() const {
  return {static_cast<int>(stage_table.rows()), static_cast<int>(stage_table.cols()), static_cast<int>(w1.rows()),
          static_cast<int>(w_logit.rows())};
}

PolicyParameters PolicyParameters::zeros(const PolicyShape& s) {
  if (s.num_stages < 1 || s.embed_dim < 1 || s.hidden < 1 || s.num_actions < 1)
    throw ShapeMismatch("policy dimensions must all be >= 1");
  PolicyParameters p;
  p.stage_table = Eigen::MatrixXd::Zero(s.num_stages, s.embed_dim);
  p.w1 = Eigen::MatrixXd::Zero(s.hidden, s.feature_dim());
  p.b1 = Eigen::MatrixXd::Zero(s.hidden, 1);
  p.w2 = Eigen::MatrixXd::Zero(s.hidden, s.hidden);
  p.b2 = Eigen::MatrixXd::Zero(s.hidden, 1);
  p.w_logit = Eigen::MatrixXd::Zero(s.num_actions, s.hidden);
  p.b_logit = Eigen::MatrixXd::Zero(s.num_actions, 1);
  p.w_value = Eigen::MatrixXd::Zero(1, s.hidden);
  p.b_value = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

PolicyParameters PolicyParameters::initialize(const PolicyShape& s, std::uint64_t seed) {
  PolicyParameters p = zeros(s);
  Rng rng(derive_seed(seed, {0x706f6c6963ULL}));
  const auto fill_uniform = [&rng](Eigen::MatrixXd& m, double bound) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  };
  const auto bound = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

  // Box-Muller keeps the stage initialisation identical across standard libraries.
  for (Eigen::Index i = 0; i < p.stage_table.size(); ++i) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    p.stage_table.data()[i] = 0.02 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  fill_uniform(p.w1, bound(s.feature_dim()));
  fill_uniform(p.b1, bound(s.feature_dim()));
  fill_uniform(p.w2, bound(s.hidden));
  fill_uniform(p.b2, bound(s.hidden));
  fill_uniform(p.w_logit, bound(s.hidden));
  fill_uniform(p.b_logit, bound(s.hidden));
  fill_uniform(p.w_value, bound(s.hidden));
  fill_uniform(p.b_value, bound(s.hidden));
  return p;
}

std::size_t PolicyParameters::num_values() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

bool PolicyParameters::all_finite() const {
  for (const auto* t : tensors())
    if (!t->allFinite()) return false;
  return true;
}

namespace {

struct ForwardCache {
  Eigen::VectorXd x, z1, h1, z2, h2, raw_logits;
  PolicyOutput out;
};

void forward_cached(const PolicyParameters& p, const Eigen::VectorXd& x, ForwardCache& c) {
  c.x = x;
  c.z1 = p.w1 * x + p.b1.col(0);
  c.h1 = c.z1.cwiseMax(0.0);
  c.z2 = p.w2 * c.h1 + p.b2.col(0);
  c.h2 = c.z2.cwiseMax(0.0);
  c.raw_logits = p.w_logit * c.h2 + p.b_logit.col(0);
  c.out.logits = c.raw_logits.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
  c.out.value = (p.w_value * c.h2)(0) + p.b_value(0, 0);
}

void check_features(const PolicyParameters& p, Eigen::Index n) {
  if (n != p.w1.cols())
    throw ShapeMismatch("feature length " + std::to_string(n) + " != expected " + std::to_string(p.w1.cols()));
}

}  // namespace

PolicyOutput forward(const PolicyParameters& params, const encoder::StateFeatures& features) {
  check_features(params, features.vector.size());
  ForwardCache c;
  forward_cached(params, features.vector, c);
  return c.out;
}

PolicyOutput forward(const PolicyParameters& params, const PolicyInput& input) {
  return forward(params, encoder::assemble_features(input.text_embedding, params.stage_table, input.depth,
                                                    input.cost_feature));
}

ActionDistribution action_distribution(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw NonFiniteLogit("empty logit vector");
  if (!logits.allFinite()) throw NonFiniteLogit("logits contain NaN or infinity");
  const Eigen::VectorXd clamped = logits.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
  Eigen::VectorXd e = (clamped.array() - clamped.maxCoeff()).exp();
  return {e / e.sum()};
}

std::size_t sample(const ActionDistribution& dist, Rng& rng, SampleMode mode) {
  const auto n = static_cast<std::size_t>(dist.probs.size());
  if (mode == SampleMode::kGreedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (dist.probs[static_cast<Eigen::Index>(i)] > dist.probs[static_cast<Eigen::Index>(best)]) best = i;
    return best;
  }
  const double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = dist.probs[static_cast<Eigen::Index>(i)];
    if (p > 0.0) last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  return last_positive;  // rounding left u above the final cumulative sum
}

LogProbEntropy log_prob_entropy(const Eigen::VectorXd& logits, std::size_t action) {
  if (action >= static_cast<std::size_t>(logits.size()))
    throw IndexOutOfRange("action " + std::to_string(action) + " outside " + std::to_string(logits.size()) + " logits");
  if (!logits.allFinite()) throw NonFiniteLogit("logits contain NaN or infinity");
  const Eigen::VectorXd clamped = logits.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
  const double m = clamped.maxCoeff();
  const double log_z = m + std::log((clamped.array() - m).exp().sum());
  const Eigen::ArrayXd log_p = clamped.array() - log_z;
  return {log_p[static_cast<Eigen::Index>(action)], -(log_p.exp() * log_p).sum()};
}

GradientResult gradients(const PolicyParameters& params, std::span<const PolicyInput> minibatch,
                         const LossDefinition& loss) {
  if (minibatch.empty()) throw ShapeMismatch("gradient requested for an empty minibatch");
  const PolicyShape shape = params.shape();
  const Eigen::Index d = shape.embed_dim;

  std::vector<ForwardCache> caches(minibatch.size());
  std::vector<PolicyOutput> outputs(minibatch.size());
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& in = minibatch[i];
    if (in.text_embedding.size() != d) throw ShapeMismatch("text embedding length differs from embed_dim");
    const auto f = encoder::assemble_features(in.text_embedding, params.stage_table, in.depth, in.cost_feature);
    forward_cached(params, f.vector, caches[i]);
    outputs[i] = caches[i].out;
  }

  std::vector<OutputGradient> upstream(minibatch.size());
  for (auto& g : upstream) g.d_logits = Eigen::VectorXd::Zero(shape.num_actions);

  GradientResult result;
  result.loss = loss(outputs, upstream);
  result.grad = PolicyParameters::zeros(shape);
  auto& g = result.grad;

  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const ForwardCache& c = caches[i];
    const OutputGradient& up = upstream[i];
    if (up.d_logits.size() != shape.num_actions) throw ShapeMismatch("loss returned a logit gradient of wrong length");

    // Clamping passes gradient only strictly inside the interval.
    const Eigen::VectorXd g_raw =
        ((c.raw_logits.array() > -kLogitClamp) && (c.raw_logits.array() < kLogitClamp)).cast<double>() *
        up.d_logits.array();

    g.w_logit.noalias() += g_raw * c.h2.transpose();
    g.b_logit.col(0) += g_raw;
    g.w_value.noalias() += up.d_value * c.h2.transpose();
    g.b_value(0, 0) += up.d_value;

    Eigen::VectorXd g_h2 = params.w_logit.transpose() * g_raw + params.w_value.row(0).transpose() * up.d_value;
    const Eigen::VectorXd g_z2 = (c.z2.array() > 0.0).cast<double>() * g_h2.array();
    g.w2.noalias() += g_z2 * c.h1.transpose();
    g.b2.col(0) += g_z2;

    const Eigen::VectorXd g_h1 = params.w2.transpose() * g_z2;
    const Eigen::VectorXd g_z1 = (c.z1.array() > 0.0).cast<double>() * g_h1.array();
    g.w1.noalias() += g_z1 * c.x.transpose();
    g.b1.col(0) += g_z1;

    const Eigen::VectorXd g_x = params.w1.transpose() * g_z1;
    g.stage_table.row(minibatch[i].depth) += g_x.segment(d, d).transpose();
  }
  return result;
}

std::string to_checkpoint_json(const PolicyParameters& params, const std::string& extra_json) {
  const PolicyShape s = params.shape();
  json doc;
  doc["format"] = "hoprouter-policy";
  doc["version"] = 1;
  doc["shape"] = {{"num_stages", s.num_stages}, {"embed_dim", s.embed_dim}, {"hidden", s.hidden},
                  {"num_actions", s.num_actions}};
  json tensors = json::object();
  const auto& names = PolicyParameters::tensor_names();
  const auto ts = params.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const Eigen::MatrixXd& m = *ts[k];
    tensors[std::string(names[k])] = {{"rows", m.rows()},
                                      {"cols", m.cols()},
                                      {"values", std::vector<double>(m.data(), m.data() + m.size())}};
  }
  doc["tensors"] = std::move(tensors);
  doc["extra"] = json::parse(extra_json);
  return doc.dump(1);
}

PolicyParameters from_checkpoint_json(const std::string& text, std::string* extra_json) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw CheckpointMismatch("checkpoint is not valid JSON");
  if (doc.value("format", "") != "hoprouter-policy" || doc.value("version", 0) != 1)
    throw CheckpointMismatch("unsupported checkpoint format or version");
  try {
    const auto& sh = doc.at("shape");
    const PolicyShape shape{sh.at("num_stages").get<int>(), sh.at("embed_dim").get<int>(), sh.at("hidden").get<int>(),
                            sh.at("num_actions").get<int>()};
    PolicyParameters p = PolicyParameters::zeros(shape);
    const auto& names = PolicyParameters::tensor_names();
    auto ts = p.tensors();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const auto& t = doc.at("tensors").at(std::string(names[k]));
      Eigen::MatrixXd& m = *ts[k];
      const auto values = t.at("values").get<std::vector<double>>();
      if (t.at("rows").get<Eigen::Index>() != m.rows() || t.at("cols").get<Eigen::Index>() != m.cols() ||
          static_cast<Eigen::Index>(values.size()) != m.size())
        throw CheckpointMismatch("tensor '" + std::string(names[k]) + "' has inconsistent shape");
      std::copy(values.begin(), values.end(), m.data());
    }
    if (!p.all_finite()) throw CheckpointMismatch("checkpoint contains non-finite values");
    if (extra_json != nullptr) *extra_json = doc.contains("extra") ? doc["extra"].dump() : "null";
    return p;
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("checkpoint is missing fields: ") + e.what());
  } catch (const ShapeMismatch& e) {
    throw CheckpointMismatch(e.what());
  }
}

void save_checkpoint(const std::string& path, const PolicyParameters& params, const std::string& extra_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << to_checkpoint_json(params, extra_json);
  if (!out) throw IoError("failed writing checkpoint " + path);
}

PolicyParameters load_checkpoint(const std::string& path, std::string* extra_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint_json(ss.str(), extra_json);
}

}  // namespace hoprouter::policy
