// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_BACKENDS_HPP_
#define HOPROUTER_BACKENDS_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hoprouter/rng.hpp"

namespace hoprouter::backends {

/// Outcome of one generation call. Token counts are those the cost formula
/// charges for.
struct GenResult {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

/// Behaviour of a simulated specialist: per-task probability of emitting the
/// reference answer, the length responses are padded to, and the wrong
/// answers it falls back on.
struct SpecialistProfile {
  std::map<std::string, double> skill;
  int out_tokens = 8;
  std::vector<std::string> wrong_answer_vocabulary;
  std::string filler = "step";
};

/// Exact input text -> response text.
struct ReplayScript {
  std::map<std::string, std::string, std::less<>> responses;
};

/// OpenAI-compatible chat-completions endpoint.
struct RemoteEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model;
  int timeout_ms = 30000;
  int max_retries = 2;
  int backoff_ms = 200;
  int max_tokens = 512;
  std::string api_key_env;  // name of the variable holding the bearer token
};

enum class BackendKind { kSimulated, kReplay, kRemote };

using KindParams = std::variant<SpecialistProfile, ReplayScript, RemoteEndpoint>;

struct ModelSpec {
  std::string name;
  double base_rate = 0.0;  // cost per token
  KindParams params;

  BackendKind kind() const noexcept { return static_cast<BackendKind>(params.index()); }
};

/// Whitespace-delimited chunk count.
std::int64_t count_tokens(std::string_view text);

/// base_rate * (tokens_in + tokens_out).
double estimate_cost(const ModelSpec& model, std::int64_t tokens_in, std::int64_t tokens_out);

/// Reference answers the simulated specialists consult. A query is recognised
/// when it occurs verbatim inside the backend input.
class AnswerKey {
 public:
  struct Entry {
    std::string query;
    std::vector<std::string> answers;
    std::string task;
  };

  void add(Entry entry);
  /// Longest known query contained in `input`, or nullptr.
  const Entry* lookup(std::string_view input) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

/// Black-box generation port. Implementations are immutable after
/// construction and safe to call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenResult generate(std::string_view input_text, Rng& rng) const = 0;
};

class SimulatedBackend final : public Backend {
 public:
  SimulatedBackend(SpecialistProfile profile, std::shared_ptr<const AnswerKey> key);
  GenResult generate(std::string_view input_text, Rng& rng) const override;

  const SpecialistProfile& profile() const noexcept { return profile_; }

 private:
  SpecialistProfile profile_;
  std::shared_ptr<const AnswerKey> key_;
};

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(ReplayScript script) : script_(std::move(script)) {}
  GenResult generate(std::string_view input_text, Rng& rng) const override;

 private:
  ReplayScript script_;
};

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteEndpoint endpoint);
  GenResult generate(std::string_view input_text, Rng& rng) const override;

 private:
  RemoteEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Request body sent to a chat-completions endpoint.
std::string build_chat_request(const RemoteEndpoint& endpoint, std::string_view input_text);

/// Parses a chat-completions response body. Provider usage counts take
/// precedence over local counting. Throws BackendFailure(kMalformedResponse).
GenResult parse_chat_response(std::string_view body, std::string_view input_text);

/// The set of M candidate models with their backends.
class ModelPool {
 public:
  ModelPool() = default;
  /// Validates base_rate > 0 and unique names; throws ConfigError otherwise.
  ModelPool(std::vector<ModelSpec> specs, std::shared_ptr<const AnswerKey> key);

  std::size_t size() const noexcept { return specs_.size(); }
  const ModelSpec& spec(std::size_t i) const { return specs_.at(i); }
  const std::vector<ModelSpec>& specs() const noexcept { return specs_; }
  const Backend& backend(std::size_t i) const { return *backends_.at(i); }

 private:
  std::vector<ModelSpec> specs_;
  std::vector<std::shared_ptr<const Backend>> backends_;
};

}  // namespace hoprouter::backends

#endif  // HOPROUTER_BACKENDS_HPP_
