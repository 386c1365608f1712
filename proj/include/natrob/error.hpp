#pragma once

#include <stdexcept>
#include <string>

namespace natrob {

enum class ErrorCode {
  DimensionMismatch,
  OutOfBounds,
  InvalidSize,
  CodecFailure,
  IoError,
  ParseError,
  SchemaViolation,
  MissingFile,
  InvalidOffset,
  BadFractions,
  DuplicateKey,
  LabelOutOfRange,
  ConnectionError,
  ProtocolError,
  Timeout,
  ShapeMismatch,
  NonFiniteLoss,
  UndefinedConditional,
  MissingPredictions,
  WrongArity,
  LengthMismatch,
  DegenerateVariance,
  EmptyInput,
  InvalidSeverity,
  InvalidConfig,
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

}  // namespace natrob
