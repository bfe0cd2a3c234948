// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "hoprouter/error.hpp"
#include "hoprouter/rng.hpp"

namespace hoprouter::data {

using json = nlohmann::json;

namespace {

Example parse_line(const std::string& line, std::size_t line_no) {
  json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded()) throw ParseError(line_no, "invalid JSON");
  if (!doc.is_object()) throw ParseError(line_no, "expected a JSON object");

  Example ex;
  auto q = doc.find("query");
  if (q == doc.end() || !q->is_string()) throw ParseError(line_no, "missing string field \"query\"");
  ex.query = q->get<std::string>();
  if (ex.query.find_first_not_of(" \t\r\n") == std::string::npos) throw ParseError(line_no, "empty query");

  auto a = doc.find("answers");
  if (a == doc.end() || !a->is_array()) throw ParseError(line_no, "missing array field \"answers\"");
  for (const auto& item : *a) {
    if (!item.is_string()) throw ParseError(line_no, "\"answers\" must contain strings");
    ex.answers.push_back(item.get<std::string>());
  }
  if (ex.answers.empty()) throw ParseError(line_no, "\"answers\" is empty");

  auto t = doc.find("task");
  if (t == doc.end() || !t->is_string()) throw ParseError(line_no, "missing string field \"task\"");
  ex.task = t->get<std::string>();
  return ex;
}

std::uint64_t example_hash(const Example& ex) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  mix(ex.query);
  for (const auto& a : ex.answers) mix(a);
  mix(ex.task);
  return h;
}

}  // namespace

std::vector<Example> parse_dataset(const std::string& text) {
  std::vector<Example> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_line(line, line_no));
  }
  return out;
}

std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_dataset(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

std::string to_jsonl(const std::vector<Example>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += json{{"query", ex.query}, {"answers", ex.answers}, {"task", ex.task}}.dump();
    out.push_back('\n');
  }
  return out;
}

void write_dataset(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path);
  out << to_jsonl(examples);
}

Split cap_and_split(std::vector<Example> examples, std::size_t cap, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("train_fraction must lie in (0,1)");

  std::vector<std::pair<std::uint64_t, Example>> keyed;
  keyed.reserve(examples.size());
  for (auto& ex : examples) keyed.emplace_back(example_hash(ex), std::move(ex));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.query, a.second.answers, a.second.task) <
           std::tie(b.first, b.second.query, b.second.answers, b.second.task);
  });

  Rng rng(derive_seed(seed, {0x73706c6974ULL}));
  for (std::size_t i = keyed.size(); i > 1; --i) std::swap(keyed[i - 1], keyed[uniform_index(rng, i)]);

  const std::size_t used = std::min(cap, keyed.size());
  // The epsilon keeps products like 300 * 0.7 from flooring to 209.
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(used) * train_fraction + 1e-9));
  Split split;
  for (std::size_t i = 0; i < used; ++i) (i < n_train ? split.train : split.test).push_back(std::move(keyed[i].second));
  return split;
}

}  // namespace hoprouter::data
