// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/backends.hpp"

#include <algorithm>
#include <set>

#include "hoprouter/error.hpp"
#include "hoprouter/evalkit.hpp"

namespace hoprouter::backends {

std::int64_t count_tokens(std::string_view text) {
  std::int64_t n = 0;
  bool in_token = false;
  for (char ch : text) {
    const bool space = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

double estimate_cost(const ModelSpec& model, std::int64_t tokens_in, std::int64_t tokens_out) {
  return model.base_rate * static_cast<double>(tokens_in + tokens_out);
}

void AnswerKey::add(Entry entry) { entries_.push_back(std::move(entry)); }

const AnswerKey::Entry* AnswerKey::lookup(std::string_view input) const {
  const Entry* best = nullptr;
  for (const auto& e : entries_) {
    if (e.query.empty() || (best && e.query.size() <= best->query.size())) continue;
    if (input.find(e.query) != std::string_view::npos) best = &e;
  }
  return best;
}

SimulatedBackend::SimulatedBackend(SpecialistProfile profile, std::shared_ptr<const AnswerKey> key)
    : profile_(std::move(profile)), key_(std::move(key)) {
  for (const auto& [task, p] : profile_.skill) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("skill for task '" + task + "' outside [0,1]");
  }
  if (profile_.out_tokens < 1) throw ConfigError("out_tokens must be >= 1");
}

GenResult SimulatedBackend::generate(std::string_view input_text, Rng& rng) const {
  const AnswerKey::Entry* entry = key_ ? key_->lookup(input_text) : nullptr;

  double p = 0.0;
  if (entry != nullptr) {
    auto it = profile_.skill.find(entry->task);
    if (it != profile_.skill.end()) p = it->second;
  }

  std::string text;
  if (entry != nullptr && !entry->answers.empty() && uniform01(rng) < p) {
    text = entry->answers.front();
  } else {
    // Only distractors sharing no token with any reference are eligible.
    std::set<std::string> gold_tokens;
    if (entry != nullptr) {
      for (const auto& a : entry->answers)
        for (auto& t : evalkit::normalized_tokens(a)) gold_tokens.insert(std::move(t));
    }
    std::vector<const std::string*> eligible;
    for (const auto& d : profile_.wrong_answer_vocabulary) {
      const auto toks = evalkit::normalized_tokens(d);
      if (std::none_of(toks.begin(), toks.end(), [&](const auto& t) { return gold_tokens.count(t) > 0; }))
        eligible.push_back(&d);
    }
    if (!eligible.empty()) text = *eligible[uniform_index(rng, eligible.size())];
  }

  std::int64_t produced = count_tokens(text);
  if (count_tokens(profile_.filler) > 0) {
    while (produced < profile_.out_tokens) {
      if (!text.empty()) text.push_back(' ');
      text += profile_.filler;
      produced = count_tokens(text);
    }
  }
  return {std::move(text), count_tokens(input_text), produced};
}

GenResult ReplayBackend::generate(std::string_view input_text, Rng&) const {
  auto it = script_.responses.find(input_text);
  if (it == script_.responses.end()) {
    throw BackendFailure(BackendFailure::Cause::kNotScripted, "replay backend has no scripted response for input");
  }
  return {it->second, count_tokens(input_text), count_tokens(it->second)};
}

ModelPool::ModelPool(std::vector<ModelSpec> specs, std::shared_ptr<const AnswerKey> key)
    : specs_(std::move(specs)) {
  if (specs_.empty()) throw ConfigError("model pool is empty");
  std::set<std::string> names;
  for (const auto& s : specs_) {
    if (!(s.base_rate > 0.0)) throw ConfigError("model '" + s.name + "' needs base_rate > 0");
    if (!names.insert(s.name).second) throw ConfigError("duplicate model name '" + s.name + "'");
    switch (s.kind()) {
      case BackendKind::kSimulated:
        backends_.push_back(std::make_shared<SimulatedBackend>(std::get<SpecialistProfile>(s.params), key));
        break;
      case BackendKind::kReplay:
        backends_.push_back(std::make_shared<ReplayBackend>(std::get<ReplayScript>(s.params)));
        break;
      case BackendKind::kRemote:
        backends_.push_back(std::make_shared<RemoteBackend>(std::get<RemoteEndpoint>(s.params)));
        break;
    }
  }
}

}  // namespace hoprouter::backends
