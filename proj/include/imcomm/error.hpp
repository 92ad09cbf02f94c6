#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imcomm {

enum class ErrorCode {
  NotSymmetric,
  NotPsd,
  NotPd,
  RankDeficient,
  ZeroMatrix,
  DimensionMismatch,
  SingularInnovation,
  NotControllable,
  SigmaNearSingular,
  NonIntegerPeriod,
  IndexOutOfRange,
  InvalidTheta,
  ZeroLambdaEntry,
  NoRootFound,
  ParseError,
  ValidationError,
  HorizonMismatch,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace imcomm
