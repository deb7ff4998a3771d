#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lagrangeforge {

// Machine-readable classification carried by every library error.
enum class ErrorCode {
  kSyntax,
  kUnknownIdentifier,
  kDomain,
  kQuadratureFailure,
  kNonDifferentiable,
  kDegenerateLagrangian,
  kInadmissible,
  kBadExponent,
  kZeroCrossing,
  kConstraintViolated,
  kBracket,
  kNonMonotone,
  kNotInvariant,
  kStepUnderflow,
  kOverflow,
  kEmptyDomain,
  kVerificationFailed,
  kUnsupported,
  kSchema,
  kUnknownPreset,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, std::size_t offset)
      : Error(code, message + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace lagrangeforge
