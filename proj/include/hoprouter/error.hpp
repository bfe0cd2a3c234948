// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_ERROR_HPP_
#define HOPROUTER_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hoprouter {

/// Base class of every error raised by the routing engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HOPROUTER_DEFINE_ERROR(Name)        \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

HOPROUTER_DEFINE_ERROR(EmptyQuery);
HOPROUTER_DEFINE_ERROR(InvalidAction);
HOPROUTER_DEFINE_ERROR(MissingGold);
HOPROUTER_DEFINE_ERROR(DomainError);
HOPROUTER_DEFINE_ERROR(NonFiniteValue);
HOPROUTER_DEFINE_ERROR(EmptyTruthList);
HOPROUTER_DEFINE_ERROR(DepthOutOfRange);
HOPROUTER_DEFINE_ERROR(ShapeMismatch);
HOPROUTER_DEFINE_ERROR(NonFiniteLogit);
HOPROUTER_DEFINE_ERROR(IndexOutOfRange);
HOPROUTER_DEFINE_ERROR(UnterminatedEpisode);
HOPROUTER_DEFINE_ERROR(IoError);
HOPROUTER_DEFINE_ERROR(ConfigError);
HOPROUTER_DEFINE_ERROR(CheckpointMismatch);

#undef HOPROUTER_DEFINE_ERROR

/// Raised when a loss term evaluates to NaN or infinity. `term()` names the
/// offending component (policy, value, entropy).
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure of a generation backend. Remote transport problems, non-2xx
/// statuses, malformed payloads and unscripted replay inputs all end here.
class BackendFailure : public Error {
 public:
  enum class Cause { kTransport, kTimeout, kHttpStatus, kMalformedResponse, kNotScripted };

  BackendFailure(Cause cause, const std::string& what, int http_status = 0)
      : Error(what), cause_(cause), http_status_(http_status) {}

  Cause cause() const noexcept { return cause_; }
  int http_status() const noexcept { return http_status_; }

 private:
  Cause cause_;
  int http_status_;
};

}  // namespace hoprouter

#endif  // HOPROUTER_ERROR_HPP_
