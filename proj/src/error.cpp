#include "dtwcert/error.hpp"

namespace dtwcert {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnsupportedNorm: return "UnsupportedNorm";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::EnvelopeMismatch: return "EnvelopeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::RadiusInsideSlack: return "RadiusInsideSlack";
    case ErrorCode::ScoreFnFailure: return "ScoreFnFailure";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::ConnectFailure: return "ConnectFailure";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::MissingResults: return "MissingResults";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
      return 1;
    case ErrorCode::InvariantViolation:
      return 3;
    default:
      return 2;
  }
}

}  // namespace dtwcert
