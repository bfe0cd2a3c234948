// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_EVALKIT_HPP_
#define HOPROUTER_EVALKIT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hoprouter::evalkit {

/// Token-level F1 quality in [0, 1].
struct QualityScore {
  double value = 0.0;
};

/// Lowercase, drop ASCII punctuation, collapse whitespace runs to one space,
/// trim. Bytes outside ASCII pass through untouched.
std::string normalize_text(std::string_view s);

/// Splits on whitespace after normalization.
std::vector<std::string> normalized_tokens(std::string_view s);

/// F1 between one response and one reference, multiset token overlap.
double f1_single(std::string_view response, std::string_view truth);

/// Maximum F1 over `truths`. Throws EmptyTruthList when `truths` is empty.
QualityScore f1_score(std::string_view response, std::span<const std::string> truths);

}  // namespace hoprouter::evalkit

#endif  // HOPROUTER_EVALKIT_HPP_
