#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtwcert {

enum class ErrorCode {
  // data ingestion
  FileMissing,
  ParseError,
  LengthMismatch,
  NonFiniteValue,
  ChannelMismatch,
  WindowTooLarge,
  // numerical contracts
  ShapeMismatch,
  UnsupportedNorm,
  InvalidWindow,
  EnvelopeMismatch,
  DomainError,
  NegativeInput,
  RadiusInsideSlack,
  // scoring
  ScoreFnFailure,
  NonFiniteScore,
  EmptyTrainSet,
  RankTooLarge,
  ConnectFailure,
  Timeout,
  ProtocolError,
  // evaluation
  EmptyScores,
  SingleClass,
  EmptyResults,
  MissingResults,
  // front end
  InvalidSpec,
  InvalidConfig,
  InvariantViolation,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Process exit status for an error: 1 usage, 2 data/module error, 3 invariant violation.
int exit_code_for(ErrorCode code);

}  // namespace dtwcert
