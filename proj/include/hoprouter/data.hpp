// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_DATA_HPP_
#define HOPROUTER_DATA_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hoprouter::data {

struct Example {
  std::string query;
  std::vector<std::string> answers;
  std::string task;

  bool operator==(const Example&) const = default;
};

/// One JSON object per line: {"query": str, "answers": [str, ...], "task": str}.
/// Blank lines are skipped. Throws IoError or ParseError (1-based line).
std::vector<Example> load_dataset(const std::string& path);
std::vector<Example> parse_dataset(const std::string& text);

std::string to_jsonl(const std::vector<Example>& examples);
void write_dataset(const std::string& path, const std::vector<Example>& examples);

struct Split {
  std::vector<Example> train;
  std::vector<Example> test;
};

/// Canonical ordering, seeded shuffle, truncate to `cap`, then the first
/// floor(n * train_fraction) go to train. Independent of input order.
Split cap_and_split(std::vector<Example> examples, std::size_t cap = 300, double train_fraction = 0.7,
                    std::uint64_t seed = 42);

}  // namespace hoprouter::data

#endif  // HOPROUTER_DATA_HPP_
