// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "hoprouter/error.hpp"

namespace hoprouter::evalkit {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

}  // namespace

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (is_ascii_punct(c)) continue;
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  const std::string norm = normalize_text(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    tokens.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

double f1_single(std::string_view response, std::string_view truth) {
  const auto resp = normalized_tokens(response);
  const auto gold = normalized_tokens(truth);
  if (resp.empty() || gold.empty()) return 0.0;

  std::unordered_map<std::string_view, std::size_t> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  std::size_t common = 0;
  for (const auto& t : resp) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;

  const double precision = static_cast<double>(common) / static_cast<double>(resp.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

QualityScore f1_score(std::string_view response, std::span<const std::string> truths) {
  if (truths.empty()) throw EmptyTruthList("f1_score requires at least one reference answer");
  double best = 0.0;
  for (const auto& t : truths) best = std::max(best, f1_single(response, t));
  return {best};
}

}  // namespace hoprouter::evalkit
