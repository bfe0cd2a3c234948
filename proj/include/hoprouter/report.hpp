// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_REPORT_HPP_
#define HOPROUTER_REPORT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoprouter/core.hpp"
#include "hoprouter/data.hpp"
#include "hoprouter/policy.hpp"

namespace hoprouter::report {

/// One line of an evaluation table. net_reward is always derived from the
/// other columns: mean_quality - alpha * mean_cost.
struct ReportRow {
  std::string dataset;
  std::string strategy;  // "router" or "static:<model>"
  double mean_quality = 0.0;
  double mean_cost = 0.0;
  double alpha = 0.0;
  double net_reward = 0.0;
  std::size_t n_examples = 0;

  double mean_cost_per_1k() const { return mean_cost * 1000.0; }
};

ReportRow make_row(std::string dataset, std::string strategy, double mean_quality, double mean_cost, double alpha,
                   std::size_t n_examples);

struct Aggregate {
  double mean_quality = 0.0;
  double mean_cost = 0.0;
  std::size_t episodes = 0;
};

/// Greedy routing of every example `repeats` times, each episode on its own
/// RNG stream derived from `seed`.
Aggregate evaluate_router(const policy::PolicyParameters& params, const Environment& env,
                          const encoder::EncoderConfig& enc, const std::vector<data::Example>& examples,
                          int repeats, std::uint64_t seed);

/// Same model at every hop.
Aggregate evaluate_static(std::size_t model_index, const Environment& env, const std::vector<data::Example>& examples,
                          int repeats, std::uint64_t seed);

nlohmann::json to_json(const ReportRow& row);
nlohmann::json rows_to_json(const std::vector<ReportRow>& rows);
/// Fixed-width text table with both per-token and per-1000-token cost columns.
std::string format_table(const std::vector<ReportRow>& rows);

}  // namespace hoprouter::report

#endif  // HOPROUTER_REPORT_HPP_
