// SPDX-License-Identifier: Apache-2.0
// Reference implementations used only by tests. They deliberately avoid the
// library code paths they check.
#ifndef HOPROUTER_TESTS_ORACLES_HPP_
#define HOPROUTER_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hoprouter/policy.hpp"

namespace oracle {

inline std::vector<std::string> brute_tokens(const std::string& s) {
  static const std::string kPunct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  std::string cleaned;
  for (char c : s) {
    if (kPunct.find(c) != std::string::npos) continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    cleaned.push_back(c);
  }
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

/// Quadratic matching with used-flags instead of hash counting.
inline double brute_f1_single(const std::string& response, const std::string& truth) {
  const auto r = brute_tokens(response);
  const auto g = brute_tokens(truth);
  if (r.empty() || g.empty()) return 0.0;
  std::vector<bool> used(g.size(), false);
  std::size_t common = 0;
  for (const auto& tok : r) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!used[j] && g[j] == tok) {
        used[j] = true;
        ++common;
        break;
      }
    }
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(r.size());
  const double rc = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * p * rc / (p + rc);
}

inline double brute_f1(const std::string& response, const std::vector<std::string>& truths) {
  double best = 0.0;
  for (const auto& t : truths) {
    const double f = brute_f1_single(response, t);
    if (f > best) best = f;
  }
  return best;
}

/// A_t = sum_l (gamma*lambda)^l delta_{t+l} within the episode, written as the
/// explicit forward sum.
inline std::vector<double> gae_definition_sum(const std::vector<double>& rewards, const std::vector<double>& values,
                                              const std::vector<bool>& dones, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next_v = dones[t] ? 0.0 : values[t + 1];
    delta[t] = rewards[t] + gamma * next_v - values[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += weight * delta[k];
      if (dones[k]) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

/// Scalar loss recomputed from scratch through forward() only.
inline double loss_value(const hoprouter::policy::PolicyParameters& params,
                         const std::vector<hoprouter::policy::PolicyInput>& batch,
                         const hoprouter::policy::LossDefinition& loss) {
  std::vector<hoprouter::policy::PolicyOutput> outs;
  for (const auto& in : batch) outs.push_back(hoprouter::policy::forward(params, in));
  std::vector<hoprouter::policy::OutputGradient> scratch(batch.size());
  for (auto& g : scratch) g.d_logits = Eigen::VectorXd::Zero(params.w_logit.rows());
  return loss(outs, scratch);
}

/// Smallest |pre-activation| of either hidden layer over the batch. Central
/// differences are meaningless when a step can cross a ReLU kink, so gradient
/// checks resample draws that land too close to one.
inline double min_abs_preactivation(const hoprouter::policy::PolicyParameters& params,
                                    const std::vector<hoprouter::policy::PolicyInput>& batch) {
  double smallest = std::numeric_limits<double>::infinity();
  const auto d = params.stage_table.cols();
  for (const auto& in : batch) {
    Eigen::VectorXd x(2 * d + 1);
    x << in.text_embedding, params.stage_table.row(in.depth).transpose(), in.cost_feature;
    const Eigen::VectorXd z1 = params.w1 * x + params.b1;
    const Eigen::VectorXd z2 = params.w2 * z1.cwiseMax(0.0) + params.b2;
    smallest = std::min({smallest, z1.cwiseAbs().minCoeff(), z2.cwiseAbs().minCoeff()});
  }
  return smallest;
}

/// Central differences over every parameter; returns max relative error
/// |a - n| / max(1e-6, |a| + |n|) against `analytic`.
inline double max_fd_relative_error(const hoprouter::policy::PolicyParameters& params,
                                    const std::vector<hoprouter::policy::PolicyInput>& batch,
                                    const hoprouter::policy::LossDefinition& loss,
                                    const hoprouter::policy::PolicyParameters& analytic, double step = 1e-5) {
  hoprouter::policy::PolicyParameters probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  double worst = 0.0;
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    Eigen::MatrixXd& m = *probe_tensors[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = loss_value(probe, batch, loss);
      m.data()[i] = saved - step;
      const double down = loss_value(probe, batch, loss);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad_tensors[k]->data()[i];
      const double err = std::abs(a - numeric) / std::max(1e-6, std::abs(a) + std::abs(numeric));
      if (err > worst) worst = err;
    }
  }
  return worst;
}

}  // namespace oracle

#endif  // HOPROUTER_TESTS_ORACLES_HPP_
