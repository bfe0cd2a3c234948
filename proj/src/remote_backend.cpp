// SPDX-License-Identifier: Apache-2.0
// Client for OpenAI-compatible chat-completion upstreams.
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hoprouter/backends.hpp"
#include "hoprouter/error.hpp"

namespace hoprouter::backends {

using json = nlohmann::json;

RemoteBackend::RemoteBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const auto scheme_end = endpoint_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote url lacks a scheme: " + endpoint_.url);
  const auto path_start = endpoint_.url.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_.url.substr(path_start);
  if (endpoint_.model.empty()) throw ConfigError("remote endpoint needs a model name");
  if (endpoint_.max_retries < 0 || endpoint_.timeout_ms <= 0) throw ConfigError("invalid remote retry/timeout settings");
}

std::string build_chat_request(const RemoteEndpoint& endpoint, std::string_view input_text) {
  json body = {
      {"model", endpoint.model},
      {"messages", json::array({{{"role", "user"}, {"content", std::string(input_text)}}})},
      {"max_tokens", endpoint.max_tokens},
  };
  return body.dump();
}

GenResult parse_chat_response(std::string_view body, std::string_view input_text) {
  const auto malformed = [](const std::string& why) {
    return BackendFailure(BackendFailure::Cause::kMalformedResponse, "malformed chat response: " + why);
  };
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw malformed("not a JSON object");
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) throw malformed("missing choices");
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
    throw malformed("missing choices[0].message");
  const auto& content = first["message"]["content"];
  if (!content.is_string()) throw malformed("choices[0].message.content is not a string");

  GenResult out{content.get<std::string>(), count_tokens(input_text), 0};
  out.tokens_out = count_tokens(out.text);
  if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
    auto prompt = usage->find("prompt_tokens");
    auto completion = usage->find("completion_tokens");
    if (prompt != usage->end() && prompt->is_number_integer() && prompt->get<std::int64_t>() >= 0)
      out.tokens_in = prompt->get<std::int64_t>();
    if (completion != usage->end() && completion->is_number_integer() && completion->get<std::int64_t>() >= 0)
      out.tokens_out = completion->get<std::int64_t>();
  }
  return out;
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

GenResult RemoteBackend::generate(std::string_view input_text, Rng&) const {
  httplib::Headers headers;
  if (!endpoint_.api_key_env.empty()) {
    if (const char* token = std::getenv(endpoint_.api_key_env.c_str()); token != nullptr && *token != '\0')
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const std::string body = build_chat_request(endpoint_, input_text);
  const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);

  BackendFailure last(BackendFailure::Cause::kTransport, "no attempt made");
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(endpoint_.backoff_ms) * (1 << (attempt - 1)));
    }
    // A fresh client per attempt keeps request state isolated between threads.
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      last = BackendFailure(timed_out ? BackendFailure::Cause::kTimeout : BackendFailure::Cause::kTransport,
                            "transport error contacting " + endpoint_.url + ": " + httplib::to_string(err));
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last = BackendFailure(BackendFailure::Cause::kHttpStatus,
                            "HTTP " + std::to_string(res->status) + " from " + endpoint_.url, res->status);
      if (retryable_status(res->status)) continue;
      throw last;
    }
    return parse_chat_response(res->body, input_text);
  }
  throw last;
}

}  // namespace hoprouter::backends
