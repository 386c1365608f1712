#include "natrob/error.hpp"

namespace natrob {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::CodecFailure: return "CodecFailure";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::InvalidOffset: return "InvalidOffset";
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::ConnectionError: return "ConnectionError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UndefinedConditional: return "UndefinedConditional";
    case ErrorCode::MissingPredictions: return "MissingPredictions";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidSeverity: return "InvalidSeverity";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

}  // namespace natrob
